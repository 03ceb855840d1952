"""Command-line front end.

Exit codes: 0 accept (or a solved evacuation), 2 reject (or no solution), 1 error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from .parser import QuerySyntaxError, parse
from .report import emit_report
from .scenario import ConfigError, ScenarioConfig, run_evacuation, run_matrix, run_query_analysis

METHODS = ("exact", "interval", "sample", "concolic", "combined")

_OVERRIDES = {
    "method": "method",
    "precision": "precision",
    "samples": "samples",
    "confidence": "omega",
    "seed": "seed",
    "threshold": "threshold",
    "retries": "retries",
}


def _common(p: argparse.ArgumentParser, method: bool = True) -> None:
    p.add_argument("--config", help="JSON scenario configuration")
    if method:
        p.add_argument("--method", choices=METHODS)
    p.add_argument("--precision", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--confidence", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold", type=Fraction, help="e.g. 1/20 or 0.05")
    p.add_argument("--retries", type=int, help="concolic attempts")
    p.add_argument("--multi-run", action="store_true", help="concolic: keep covering new paths")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leakbound", description="Bound what query answers reveal about secrets.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="decide whether a query may be answered")
    a.add_argument("--query", help="query file; default is the Nearby query of the config")
    _common(a)

    e = sub.add_parser("evacuate", help="run the berth-allocation loop and track leakage")
    _common(e)

    m = sub.add_parser("matrix", help="Nearby analyses across methods and prior sizes")
    _common(m, method=False)
    m.add_argument("--methods", nargs="+", choices=METHODS, default=["exact", "sample", "concolic"])
    m.add_argument("--sizes", nargs="+", type=int, default=[50, 100, 200])
    m.add_argument("--islands", nargs="+", type=int, default=[1])
    return ap


def load_config(args) -> ScenarioConfig:
    base = ScenarioConfig.load(args.config).to_dict() if args.config else {}
    for flag, key in _OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    if args.multi_run:
        base["multi_run"] = True
    return ScenarioConfig.from_dict(base)


def _write(data: bytes, path: str | None) -> None:
    if path:
        with open(path, "wb") as f:
            f.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "analyze":
            q = None
            if args.query:
                with open(args.query) as f:
                    q = parse(f.read())
            rep = run_query_analysis(cfg, q)
            _write(emit_report(rep, args.output), args.out)
            return 0 if rep.accept else 2
        if args.command == "evacuate":
            rep = run_evacuation(cfg)
            _write(emit_report(rep, args.output), args.out)
            return 0 if rep.solved else 2
        reps = run_matrix(cfg, args.methods, args.sizes, args.islands)
        _write(emit_report(reps, args.output), args.out)
        return 0
    except (ConfigError, QuerySyntaxError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
