"""Run records and their JSON / CSV renderings.

Rationals are written as ``{"frac": "1/41", "dec": "0.024390243902"}`` so a
report can be read back exactly; unbounded ornaments are written as "inf".
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Any, Sequence

DECIMALS = 12


def fmt_fraction(q: Fraction) -> dict:
    return {"frac": f"{q.numerator}/{q.denominator}", "dec": f"{float(q):.{DECIMALS}g}"}


def _encode(v: Any) -> Any:
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, Fraction):
        return fmt_fraction(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    return v


def _decode(v: Any) -> Any:
    if isinstance(v, dict):
        if set(v) == {"frac", "dec"}:
            return Fraction(v["frac"])
        return {k: _decode(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_decode(x) for x in v]
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return v


@dataclass
class OutputRecord:
    o: int
    bound: Fraction
    elapsed: float
    ornaments: list[dict] = field(default_factory=list)
    note: str = ""


@dataclass
class StepRecord:
    """One AtLeast/Nearby pair of the evacuation loop."""

    ship: int
    ask: int
    ok: bool
    berths: list[int]
    bound: Fraction
    elapsed: float


@dataclass
class RunReport:
    kind: str
    method: str
    params: dict
    seed: int
    accept: bool | None = None
    outputs: list[OutputRecord] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)
    joint_bound: Fraction | None = None
    selected: list[int] = field(default_factory=list)
    solved: bool | None = None
    elapsed: float = 0.0
    # process CPU seconds; unlike wall time it excludes time stolen by other tenants
    cpu: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def queries(self) -> int:
        return len(self.steps)

    @property
    def worst_bound(self) -> Fraction | None:
        return max((o.bound for o in self.outputs), default=None)

    def to_dict(self, timing: bool = True) -> dict:
        d = _encode(asdict(self))
        if not timing:
            d.pop("elapsed")
            d.pop("cpu")
            for part in d["outputs"] + d["steps"]:
                part.pop("elapsed")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = _decode(d)
        d["outputs"] = [OutputRecord(**o) for o in d.get("outputs", [])]
        d["steps"] = [StepRecord(**s) for s in d.get("steps", [])]
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


CSV_COLUMNS = (
    "kind",
    "method",
    "precision",
    "samples",
    "omega",
    "seed",
    "side",
    "islands",
    "points",
    "queries",
    "accept",
    "worst_bound",
    "worst_bound_dec",
    "joint_bound",
    "joint_bound_dec",
    "elapsed",
    "cpu",
)


def csv_row(r: RunReport) -> dict:
    def frac(q):
        return ("", "") if q is None else (f"{q.numerator}/{q.denominator}", f"{float(q):.{DECIMALS}g}")

    wb, wd = frac(r.worst_bound)
    jb, jd = frac(r.joint_bound)
    return {
        "kind": r.kind,
        "method": r.method,
        "precision": r.params.get("precision", ""),
        "samples": r.params.get("samples", ""),
        "omega": r.params.get("omega", ""),
        "seed": r.seed,
        "side": r.info.get("side", ""),
        "islands": r.info.get("islands", ""),
        "points": r.info.get("points", ""),
        "queries": r.queries,
        "accept": "" if r.accept is None else int(r.accept),
        "worst_bound": wb,
        "worst_bound_dec": wd,
        "joint_bound": jb,
        "joint_bound_dec": jd,
        "elapsed": f"{r.elapsed:.6f}",
        "cpu": f"{r.cpu:.6f}",
    }


def emit_report(report: RunReport | Sequence[RunReport], fmt: str = "json") -> bytes:
    """Serialize one report (or a batch) as JSON or CSV (one row per run)."""
    batch = [report] if isinstance(report, RunReport) else list(report)
    if fmt == "json":
        body = batch[0].to_dict() if isinstance(report, RunReport) else [r.to_dict() for r in batch]
        return (json.dumps(body, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in batch:
            w.writerow(csv_row(r))
        return buf.getvalue().encode()
    raise ValueError(f"unknown report format {fmt!r}")


def load_report(data: bytes | str) -> RunReport | list[RunReport]:
    d = json.loads(data)
    if isinstance(d, list):
        return [RunReport.from_dict(x) for x in d]
    return RunReport.from_dict(d)
