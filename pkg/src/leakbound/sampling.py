"""Monte Carlo tightening of support and mass bounds."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .betaci import BetaCounts, CredibleInterval, credible_interval
from .exact import DEFAULT_FUEL, can_output
from .probpoly import Powerset, ProbPoly
from .region import Region
from .syntax import Stmt

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleParams:
    n_samples: int = 1000
    omega: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if not 0 < self.omega < 1:
            raise ValueError("omega must lie in (0, 1)")


@dataclass
class ElementRefinement:
    """What sampling learned about one element."""

    index: int
    region_count: int
    counts: BetaCounts
    interval: CredibleInterval | None
    skipped: str = ""


@dataclass
class SampleReport:
    elements: list[ElementRefinement] = field(default_factory=list)

    @property
    def counts(self) -> BetaCounts:
        a = sum(e.counts.alpha for e in self.elements)
        b = sum(e.counts.beta for e in self.elements)
        return BetaCounts(a, b)


Classifier = Callable[[dict], bool]


def output_classifier(s: Stmt, r: str, o: int, inputs: Mapping[str, int] | None = None, fuel: int = DEFAULT_FUEL) -> Classifier:
    """Whether some run of ``s`` from a secret valuation can end with ``r == o``."""
    fixed = dict(inputs or {})

    def feasible(sigma: dict) -> bool:
        return can_output(s, {**fixed, **sigma}, r, o, fuel)

    return feasible


def allocate(counts: Sequence[int], n: int) -> list[int]:
    """Split ``n`` samples proportionally to ``counts`` (largest remainder)."""
    total = sum(counts)
    if total == 0:
        return [0] * len(counts)
    raw = [n * c / total for c in counts]
    out = [int(x) for x in raw]
    rest = sorted(range(len(counts)), key=lambda i: raw[i] - out[i], reverse=True)
    for i in rest[: n - sum(out)]:
        out[i] += 1
    return out


def _refinable(P: Powerset) -> list[str]:
    """Reason each element cannot be refined, or '' when it can."""
    reasons = []
    for i, e in enumerate(P.elements):
        c = e.count()
        if not c.exact:
            reasons.append("region count not exact")
            continue
        if any(
            j != i and e.region.meet_region(f.region).count().hi > 0 for j, f in enumerate(P.elements)
        ):
            reasons.append("region overlaps another element")
            continue
        reasons.append("")
    return reasons


def tighten(e: ProbPoly, n_g: int, ci: CredibleInterval, offset: int = 0, pool: int | None = None) -> ProbPoly:
    """Apply a support-fraction interval to an element.

    The fraction is taken over ``pool`` points (default the whole region),
    plus ``offset`` points already known to be in the support.
    """
    pool = n_g if pool is None else pool
    lo = math.floor(ci.p_L * pool) + offset
    hi = math.ceil(ci.p_U * pool) + offset
    return ProbPoly.make(
        e.region,
        max(e.s_min, lo),
        min(e.s_max, hi),
        e.p_min,
        e.p_max,
        e.m_min,
        e.m_max,
    )


def sample_refine(
    P: Powerset,
    feasible: Classifier,
    params: SampleParams,
) -> tuple[Powerset, SampleReport]:
    """Tighten ``s`` and ``m`` of each element from uniform samples of its region.

    ``feasible`` tells whether a sampled secret valuation can produce the
    observed output. Elements whose count is inexact or whose region meets
    another element's are left unchanged.
    """
    rng = random.Random(params.seed)
    reasons = _refinable(P)
    ok = [i for i, why in enumerate(reasons) if not why]
    n_each = allocate([P.elements[i].count().lo for i in ok], params.n_samples)
    budget = dict(zip(ok, n_each))
    report = SampleReport()
    out = []
    for i, e in enumerate(P.elements):
        if reasons[i]:
            log.warning("sampling skipped element %d: %s", i, reasons[i])
            report.elements.append(ElementRefinement(i, e.count().hi, BetaCounts(), None, reasons[i]))
            out.append(e)
            continue
        counts = BetaCounts()
        sampler = e.region.sampler()
        names = sorted(P.vars)
        for _ in range(budget[i]):
            sigma = sampler.draw(rng)
            counts = counts.add(feasible({x: sigma[x] for x in names}))
        n_g = e.count().lo
        if counts.total == 0:
            report.elements.append(ElementRefinement(i, n_g, counts, None, "no samples allocated"))
            out.append(e)
            continue
        ci = credible_interval(counts, params.omega)
        report.elements.append(ElementRefinement(i, n_g, counts, ci))
        out.append(tighten(e, n_g, ci))
    return P.with_elements(out), report
