"""Concolic execution, path-condition counting and the refinements built on it."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .betaci import BetaCounts, CredibleInterval, credible_interval
from .concrete import eval_bool, eval_expr
from .exact import DEFAULT_FUEL, NonTermination
from .linear import DNF_LIMIT, bool_to_dnf
from .probpoly import Powerset, ProbPoly
from .region import Region, count_union
from .sampling import Classifier, SampleParams, _refinable, allocate, tighten
from .syntax import (
    TRUE,
    Abs,
    And,
    Assign,
    BinOp,
    BoolExpr,
    Expr,
    If,
    Lit,
    Not,
    Or,
    PIf,
    Rel,
    Seq,
    Skip,
    Stmt,
    Var,
    While,
    assigned_vars,
)

log = logging.getLogger(__name__)

_ARITH = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b}


def fold(e: Expr) -> Expr:
    """Constant folding."""
    if isinstance(e, BinOp):
        a, b = fold(e.left), fold(e.right)
        if isinstance(a, Lit) and isinstance(b, Lit):
            return Lit(_ARITH[e.op](a.value, b.value))
        if e.op == "+" and a == Lit(0):
            return b
        if e.op in "+-" and b == Lit(0):
            return a
        if e.op == "*" and (a == Lit(0) or b == Lit(0)):
            return Lit(0)
        if e.op == "*" and a == Lit(1):
            return b
        if e.op == "*" and b == Lit(1):
            return a
        return BinOp(e.op, a, b)
    if isinstance(e, Abs):
        a = fold(e.arg)
        return Lit(abs(a.value)) if isinstance(a, Lit) else Abs(a)
    return e


def subst(e: Expr, zeta: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return zeta[e.name]
    if isinstance(e, BinOp):
        return BinOp(e.op, subst(e.left, zeta), subst(e.right, zeta))
    if isinstance(e, Abs):
        return Abs(subst(e.arg, zeta))
    return e


def sym(e: Expr, zeta: Mapping[str, Expr]) -> Expr:
    return fold(subst(e, zeta))


@dataclass(frozen=True)
class ConcolicResult:
    final: dict[str, int]
    prob: Fraction
    pc: tuple[BoolExpr, ...]

    def condition(self) -> BoolExpr:
        out: BoolExpr = TRUE
        for b in self.pc:
            out = b if out is TRUE else And(out, b)
        return out


class _Run:
    def __init__(self, rng: random.Random, fuel: int):
        self.rng = rng
        self.fuel = fuel
        self.prob = Fraction(1)
        self.pc: list[BoolExpr] = []

    def record(self, b: BoolExpr) -> None:
        if isinstance(b, Rel):
            l, r = b.left, b.right
            if isinstance(l, Lit) and isinstance(r, Lit):
                return
        self.pc.append(b)

    def guard(self, b: BoolExpr, sigma, zeta) -> bool:
        """Evaluate ``b`` concretely and record the symbolic reason for its value.

        ``&&`` and ``||`` are read with short-circuit evaluation, so only the
        operands that decided the outcome are recorded.
        """
        if isinstance(b, Rel):
            v = eval_bool(sigma, b)
            s = Rel(b.op, sym(b.left, zeta), sym(b.right, zeta))
            self.record(s if v else Not(s))
            return v
        if isinstance(b, Not):
            return not self.guard(b.arg, sigma, zeta)
        if isinstance(b, And):
            return self.guard(b.left, sigma, zeta) and self.guard(b.right, sigma, zeta)
        return self.guard(b.left, sigma, zeta) or self.guard(b.right, sigma, zeta)

    def exec(self, s: Stmt, sigma: dict, zeta: dict) -> None:
        if isinstance(s, Skip):
            return
        if isinstance(s, Assign):
            sigma[s.var] = eval_expr(sigma, s.expr)
            zeta[s.var] = sym(s.expr, zeta)
        elif isinstance(s, Seq):
            self.exec(s.first, sigma, zeta)
            self.exec(s.second, sigma, zeta)
        elif isinstance(s, If):
            self.exec(s.then if self.guard(s.cond, sigma, zeta) else s.orelse, sigma, zeta)
        elif isinstance(s, PIf):
            if self.rng.random() < s.prob:
                self.prob *= s.prob
                self.exec(s.then, sigma, zeta)
            else:
                self.prob *= 1 - s.prob
                self.exec(s.orelse, sigma, zeta)
        elif isinstance(s, While):
            while self.guard(s.cond, sigma, zeta):
                self.fuel -= 1
                if self.fuel < 0:
                    raise NonTermination("concolic run exhausted its fuel")
                self.exec(s.body, sigma, zeta)
        else:
            raise TypeError(f"unknown statement {s!r}")


def concolic_run(
    s: Stmt,
    sigma_T: Mapping[str, int],
    inputs: Mapping[str, int] | None = None,
    rng: random.Random | None = None,
    fuel: int = DEFAULT_FUEL,
) -> ConcolicResult:
    """One concrete run that also tracks secrets symbolically.

    Secrets stay symbolic, inputs and locals enter as literals.
    """
    rng = rng or random.Random(0)
    sigma = {**dict(inputs or {}), **dict(sigma_T)}
    zeta: dict[str, Expr] = {x: Lit(v) for x, v in sigma.items()}
    for x in sigma_T:
        zeta[x] = Var(x)
    for x in assigned_vars(s):
        if x not in sigma:
            sigma[x] = 0
            zeta[x] = Lit(0)
    run = _Run(rng, fuel)
    run.exec(s, sigma, zeta)
    return ConcolicResult(sigma, run.prob, tuple(run.pc))


def pc_to_regions(pc: ConcolicResult | BoolExpr | Sequence[BoolExpr], C_T: Sequence[Region], limit: int = DNF_LIMIT) -> list[Region]:
    """Regions whose union is exactly the points of ``C_T`` satisfying ``pc``."""
    if isinstance(pc, ConcolicResult):
        b = pc.condition()
    elif isinstance(pc, (Rel, Not, And, Or)):
        b = pc
    else:
        b = ConcolicResult({}, Fraction(1), tuple(pc)).condition()
    out = []
    for conj in bool_to_dnf(b, limit):
        for g in C_T:
            h = g.meet(conj)
            if not h.is_empty:
                out.append(h)
    return out


@dataclass
class ConcolicReport:
    attempts: int = 0
    runs: list[ConcolicResult] = field(default_factory=list)
    covered: dict[int, int] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return bool(self.runs)


def _draw(P: Powerset, rng: random.Random, names) -> tuple[int, dict[str, int]]:
    counts = [e.count().lo for e in P.elements]
    i = rng.choices(range(len(counts)), weights=counts)[0]
    sigma = P.elements[i].region.sampler().draw(rng)
    return i, {x: sigma[x] for x in names}


def _under_regions(P: Powerset, runs: Sequence[ConcolicResult], limit: int) -> list[list[Region]]:
    out = []
    for e in P.elements:
        gs: list[Region] = []
        for run in runs:
            gs.extend(pc_to_regions(run, [e.region], limit))
        out.append(gs)
    return out


def concolic_refine(
    P: Powerset,
    s: Stmt,
    r: str,
    o: int,
    inputs: Mapping[str, int] | None = None,
    retries: int = 100,
    seed: int = 0,
    fuel: int = DEFAULT_FUEL,
    multi: bool = False,
    limit: int = DNF_LIMIT,
) -> tuple[Powerset, ConcolicReport, list[list[Region]]]:
    """Raise ``s_min`` to the exact size of the inputs that follow a run's path.

    Single-run mode keeps the first run that produces ``r == o``. Multi-run
    mode keeps sampling outside the inputs already covered, for up to
    ``retries`` attempts, and counts the union of all successful paths.
    Returns the refined powerset, a report and the under-approximating
    regions per element.
    """
    rng = random.Random(seed)
    report = ConcolicReport()
    names = sorted(P.vars)
    reasons = _refinable(P)
    if P.is_empty or all(reasons):
        return P, report, [[] for _ in P.elements]
    if writes_secret(s, P):
        # paths constrain initial values but the posterior is over final ones
        log.warning("query assigns to a secret; concolic refinement skipped")
        return P, report, [[] for _ in P.elements]
    G: list[list[Region]] = [[] for _ in P.elements]
    for _ in range(retries):
        i, sigma = _draw(P, rng, names)
        if any(g.contains(sigma) for g in G[i]):
            continue
        report.attempts += 1
        res = concolic_run(s, sigma, inputs, random.Random(rng.getrandbits(64)), fuel)
        if res.final[r] != o:
            continue
        report.runs.append(res)
        G = _under_regions(P, report.runs, limit)
        if not multi:
            break
    if not report.runs:
        log.warning("no concolic run produced %s = %s in %d attempts", r, o, retries)
        return P, report, G
    out = []
    for i, e in enumerate(P.elements):
        if reasons[i]:
            out.append(e)
            continue
        n = count_union(G[i]).lo
        report.covered[i] = n
        out.append(ProbPoly.make(e.region, max(e.s_min, n), e.s_max, e.p_min, e.p_max, e.m_min, e.m_max))
    return P.with_elements(out), report, G


def writes_secret(s: Stmt, P: Powerset) -> bool:
    return bool(assigned_vars(s) & set(P.vars))


def concolic_seed(seed: int) -> int:
    return random.Random(f"concolic:{seed}").getrandbits(64)


@dataclass
class CombinedReport:
    concolic: ConcolicReport
    element_counts: dict[int, BetaCounts] = field(default_factory=dict)
    intervals: dict[int, CredibleInterval] = field(default_factory=dict)
    discarded: int = 0


def combined_refine(
    P: Powerset,
    s: Stmt,
    r: str,
    o: int,
    feasible: Classifier,
    params: SampleParams,
    inputs: Mapping[str, int] | None = None,
    retries: int = 100,
    fuel: int = DEFAULT_FUEL,
    multi: bool = False,
    limit: int = DNF_LIMIT,
) -> tuple[Powerset, CombinedReport]:
    """Concolic under-approximation first, then sampling of the remainder only."""
    if writes_secret(s, P):
        log.warning("query assigns to a secret; refinement skipped")
        return P, CombinedReport(ConcolicReport())
    # concolic draws use a derived stream; the sampling stream matches sample_refine
    Pc, crep, G = concolic_refine(P, s, r, o, inputs, retries, concolic_seed(params.seed), fuel, multi, limit)
    report = CombinedReport(crep)
    reasons = _refinable(P)
    rng = random.Random(params.seed)
    names = sorted(P.vars)
    ok = [i for i, why in enumerate(reasons) if not why]
    covered = {i: (count_union(G[i]).lo if G[i] else 0) for i in ok}
    rest = {i: P.elements[i].count().lo - covered[i] for i in ok}
    budget = dict(zip(ok, allocate([rest[i] for i in ok], params.n_samples)))
    out = list(Pc.elements)
    for i in ok:
        e = Pc.elements[i]
        n_T, n_G = P.elements[i].count().lo, covered[i]
        if rest[i] == 0:
            out[i] = ProbPoly.make(e.region, n_T, n_T, e.p_min, e.p_max, e.m_min, e.m_max)
            continue
        sampler = e.region.sampler()
        counts = BetaCounts()
        draws = 0
        cap = 100 * max(1, budget[i])
        while counts.total < budget[i] and draws < cap:
            draws += 1
            sigma = sampler.draw(rng)
            if any(g.contains(sigma) for g in G[i]):
                report.discarded += 1
                continue
            counts = counts.add(feasible({x: sigma[x] for x in names}))
        report.element_counts[i] = counts
        if counts.total == 0:
            continue
        ci = credible_interval(counts, params.omega)
        report.intervals[i] = ci
        out[i] = tighten(e, n_T, ci, offset=n_G, pool=rest[i])
    return P.with_elements(out), report
