"""Evacuation scenario: configuration, query builders and experiment drivers."""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Sequence

from .concolic import concolic_run
from .exact import Dist
from .parser import parse
from .policy import (
    Belief,
    Method,
    MethodParams,
    OutputReport,
    OutputSpec,
    ThresholdPolicy,
    belief_update,
    policy_decide,
)
from .probpoly import Powerset
from .report import OutputRecord, RunReport, StepRecord
from .syntax import Program

log = logging.getLogger(__name__)

# the exact oracle is switched off above this many prior points
EXACT_LIMIT = 10**7


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Ship:
    id: int
    nation: int
    capacity: int
    x: int
    y: int


@dataclass
class ScenarioConfig:
    ships: list[Ship] = field(default_factory=list)
    capacity_range: tuple[int, int] = (0, 1000)
    coord_range: tuple[int, int] = (0, 1000)
    islands: list[tuple[int, int]] = field(default_factory=list)
    d: int = 100
    demand: int = 0
    threshold: Fraction = Fraction(1)
    method: str = "interval"
    precision: int = 4
    samples: int = 1000
    omega: float = 0.9
    seed: int = 0
    retries: int = 1000
    multi_run: bool = False
    # the evacuation loop visits ships 0..S inclusive, wrapping to ship 0
    inclusive_loop: bool = True

    def __post_init__(self):
        self.ships = [s if isinstance(s, Ship) else Ship(**s) for s in self.ships]
        self.islands = [tuple(p) for p in self.islands]
        self.capacity_range = tuple(self.capacity_range)
        self.coord_range = tuple(self.coord_range)
        self.threshold = Fraction(self.threshold)
        self.validate()

    def validate(self) -> None:
        if self.d < 0:
            raise ConfigError("d must be non-negative")
        if self.demand < 0:
            raise ConfigError("demand must be non-negative")
        clo, chi = self.capacity_range
        lo, hi = self.coord_range
        if clo > chi or lo > hi:
            raise ConfigError("empty public range")
        for s in self.ships:
            if not clo <= s.capacity <= chi:
                raise ConfigError(f"ship {s.id}: capacity {s.capacity} outside {self.capacity_range}")
            if not (lo <= s.x <= hi and lo <= s.y <= hi):
                raise ConfigError(f"ship {s.id}: location outside {self.coord_range}")
        if len({s.id for s in self.ships}) != len(self.ships):
            raise ConfigError("duplicate ship ids")
        if not 0 < self.threshold <= 1:
            raise ConfigError("threshold must lie in (0, 1]")
        Method.parse(self.method)

    @property
    def params(self) -> MethodParams:
        return MethodParams(
            precision=self.precision,
            samples=self.samples,
            omega=self.omega,
            seed=self.seed,
            retries=self.retries,
            multi_run=self.multi_run,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["threshold"] = f"{self.threshold.numerator}/{self.threshold.denominator}"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def place_islands(c: int, d: int, coord_range: tuple[int, int], seed: int = 0, tries: int = 10_000) -> list[tuple[int, int]]:
    """``c`` random islands, pairwise at least ``2 * d`` apart (Manhattan)."""
    rng = random.Random(f"islands:{seed}")
    lo, hi = coord_range
    out: list[tuple[int, int]] = []
    for _ in range(tries):
        if len(out) == c:
            return out
        p = (rng.randint(lo, hi), rng.randint(lo, hi))
        if all(manhattan(p, q) >= 2 * d for q in out):
            out.append(p)
    if len(out) == c:
        return out
    raise ConfigError(f"could not place {c} islands {2 * d} apart in {coord_range}")


def _near_text(x: str, y: str, islands, d: int) -> str:
    return " || ".join(f"|{x} - {a}| + |{y} - {b}| <= {d}" for a, b in islands)


def nearby_program(islands, d: int, coord_range, x: str = "x", y: str = "y", out: str = "out") -> Program:
    """``out`` is 1 when the location is within ``d`` of some island."""
    lo, hi = coord_range
    text = (
        f"secret {x} in [{lo}, {hi}]; secret {y} in [{lo}, {hi}]; output {out};\n"
        f"{out} := 0;\nif {_near_text(x, y, islands, d)} {{ {out} := 1 }}\n"
    )
    return parse(text)


def ship_vars(ship: Ship) -> tuple[str, str, str]:
    return f"cap{ship.id}", f"x{ship.id}", f"y{ship.id}"


def ok_program(ship: Ship, ask: int, cfg: ScenarioConfig, out: str = "ok") -> Program:
    """AtLeast(ship, ask) && Nearby(ship, islands, d) as one query."""
    cap, x, y = ship_vars(ship)
    clo, chi = cfg.capacity_range
    lo, hi = cfg.coord_range
    text = (
        f"secret {cap} in [{clo}, {chi}]; secret {x} in [{lo}, {hi}]; secret {y} in [{lo}, {hi}];\n"
        f"input ask = {ask}; output {out};\n"
        f"{out} := 0;\nif {cap} >= ask && ({_near_text(x, y, cfg.islands, cfg.d)}) {{ {out} := 1 }}\n"
    )
    return parse(text)


def uniform_prior(q: Program, method: Method, precision: int) -> Powerset | Dist:
    n = 1
    for lo, hi in q.secrets.values():
        n *= hi - lo + 1
    if method is Method.EXACT:
        if n > EXACT_LIMIT:
            raise ConfigError(f"exact oracle disabled for {n} prior points (limit {EXACT_LIMIT})")
        return Dist.uniform(q.secrets)
    return Powerset.uniform(q.secrets, Fraction(1, n), precision)


def _record(rep: OutputReport) -> OutputRecord:
    P = rep.posterior
    orn = [e.ornaments() for e in P.elements] if isinstance(P, Powerset) else []
    return OutputRecord(rep.o, rep.bound, rep.elapsed, orn, rep.note)


def run_query_analysis(cfg: ScenarioConfig, q: Program | None = None, r: str | None = None) -> RunReport:
    """Policy decision for one query against a uniform prior over its secrets.

    Without an explicit query, the generalized Nearby query over the
    configured islands is analysed.
    """
    method = Method.parse(cfg.method)
    info: dict = {}
    if q is None:
        if not cfg.islands:
            raise ConfigError("no query given and no islands configured")
        q = nearby_program(cfg.islands, cfg.d, cfg.coord_range)
        info = {"islands": len(cfg.islands), "side": cfg.coord_range[1] - cfg.coord_range[0] + 1}
    if r is None:
        if len(q.outputs) != 1:
            raise ConfigError("query must declare exactly one output")
        r = q.outputs[0]
    start, cpu = time.monotonic(), time.process_time()
    prior = uniform_prior(q, method, cfg.precision)
    belief = Belief({"T": prior})
    dec = policy_decide(belief, q, r, ThresholdPolicy(cfg.threshold), method, cfg.params)
    elapsed, cpu = time.monotonic() - start, time.process_time() - cpu
    # each sampled output holds with probability omega on its own; a reader may union-bound
    sampled = 0
    if method in (Method.S, Method.CES):
        sampled = sum("skipped" not in o.note for o in dec.outputs)
    points = 1
    for lo, hi in q.secrets.values():
        points *= hi - lo + 1
    return RunReport(
        kind="analyze",
        method=method.value,
        params=_param_dict(cfg),
        seed=cfg.seed,
        accept=dec.accept,
        outputs=[_record(o) for o in dec.outputs],
        elapsed=elapsed,
        cpu=cpu,
        info={"reason": dec.reason, "points": points, "sampled_outputs": sampled, **info},
    )


def _param_dict(cfg: ScenarioConfig) -> dict:
    return {
        "precision": cfg.precision,
        "samples": cfg.samples,
        "omega": cfg.omega,
        "retries": cfg.retries,
        "multi_run": cfg.multi_run,
        "threshold": cfg.threshold,
    }


def answer(q: Program, secrets: dict[str, int], seed: int = 0) -> int:
    """The query's output on the true secrets."""
    res = concolic_run(q.bind_inputs(), secrets, rng=random.Random(seed))
    return res.final[q.outputs[0]]


def run_evacuation(cfg: ScenarioConfig) -> RunReport:
    """Binary search for berths, revising the coordinator's belief after every query.

    ``berths[i] = (lo, hi)`` brackets ship i's effective capacity (its
    capacity if near an island, otherwise 0) as lo <= cap < hi, except that
    hi starts at the top of the public range. The loop stops when the lower
    bounds meet demand, or reports no solution when a full pass changes nothing.
    """
    method = Method.parse(cfg.method)
    if not cfg.ships:
        raise ConfigError("evacuation needs at least one ship")
    start, cpu = time.monotonic(), time.process_time()
    params = cfg.params
    groups = {}
    for s in cfg.ships:
        cap, x, y = ship_vars(s)
        q0 = ok_program(s, 0, cfg)
        groups[str(s.id)] = uniform_prior(q0, method, cfg.precision)
    belief = Belief(groups)
    clo, chi = cfg.capacity_range
    berths = [[clo, chi] for _ in cfg.ships]
    steps: list[StepRecord] = []
    S = len(cfg.ships)
    per_pass = S + 1 if cfg.inclusive_loop else S

    def solved() -> bool:
        return sum(b[0] for b in berths) >= cfg.demand

    done = solved()
    while not done:
        changed = False
        for j in range(per_pass):
            i = j % S
            ship = cfg.ships[i]
            ask = (berths[i][0] + berths[i][1]) // 2
            q = ok_program(ship, ask, cfg)
            cap, x, y = ship_vars(ship)
            o = answer(q, {cap: ship.capacity, x: ship.x, y: ship.y}, cfg.seed)
            t0 = time.monotonic()
            belief, _ = belief_update(belief, q, OutputSpec("ok", o), method, params)
            new = [ask, berths[i][1]] if o else [berths[i][0], ask]
            changed |= new != berths[i]
            berths[i] = new
            steps.append(StepRecord(ship.id, ask, bool(o), list(new), belief.bound(str(ship.id)), time.monotonic() - t0))
            if solved():
                done = True
                break
        if not done and not changed:
            break
    return RunReport(
        kind="evacuate",
        method=method.value,
        params=_param_dict(cfg),
        seed=cfg.seed,
        steps=steps,
        joint_bound=belief.joint_bound(),
        selected=[s.id for s, b in zip(cfg.ships, berths) if b[0] > 0],
        solved=solved(),
        elapsed=time.monotonic() - start,
        cpu=time.process_time() - cpu,
        info={"berths": berths, "demand": cfg.demand},
    )


def run_matrix(
    cfg: ScenarioConfig,
    methods: Sequence[str],
    sizes: Sequence[int],
    island_counts: Sequence[int] = (1,),
) -> list[RunReport]:
    """Nearby analyses over prior side lengths, island counts and methods.

    The proximity scales with the side (``d = side // 10``, as 100 is to 1000)
    and islands are re-placed per size.
    """
    out = []
    for side in sizes:
        d = max(1, side // 10)
        for c in island_counts:
            islands = place_islands(c, d, (0, side - 1), cfg.seed)
            for m in methods:
                sub = ScenarioConfig(**{**_shallow(cfg), "coord_range": (0, side - 1), "d": d,
                                        "islands": islands, "method": m, "ships": []})
                try:
                    out.append(run_query_analysis(sub))
                except ConfigError as err:
                    log.warning("skipping %s at side %d: %s", m, side, err)
    return out


def _shallow(cfg: ScenarioConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
