"""Probabilistic polyhedra over interval regions and their bounded powerset."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exact import Dist
from .linear import DNF_LIMIT, DNFExplosion, Linear, bool_to_dnf, negate_conj
from .region import DEFAULT_BUDGET, INF, Region, count_union
from .syntax import BoolExpr

ZERO = Fraction(0)
ONE = Fraction(1)


def _ceil_div(a, w):
    if a <= 0:
        return 0
    if w == INF:
        return 1
    return -(-a // w)


@dataclass(frozen=True)
class ProbPoly:
    region: Region
    s_min: int
    s_max: int | float
    p_min: Fraction
    p_max: Fraction
    m_min: Fraction
    m_max: Fraction

    @classmethod
    def make(cls, region, s_min, s_max, p_min, p_max, m_min, m_max, budget: int = DEFAULT_BUDGET) -> "ProbPoly":
        """Build an element, tightening the ornaments against each other."""
        region = region.normalize()
        n = region.count(budget)
        s_max = min(s_max, n.hi)
        s_min = max(0, s_min)
        if region.is_empty or s_max <= 0:
            return cls.empty(region.vars)
        p_min = max(ZERO, Fraction(p_min))
        p_max = min(ONE, Fraction(p_max))
        m_min = max(ZERO, Fraction(m_min), p_min * s_min)
        m_max = Fraction(m_max)
        if s_max != INF:
            m_max = min(m_max, p_max * s_max)
        p_max = min(p_max, m_max)
        if m_max <= 0:
            return cls.empty(region.vars)
        s_min = min(s_min, s_max)
        p_min = min(p_min, p_max)
        m_min = min(m_min, m_max)
        return cls(region, s_min, s_max, p_min, p_max, m_min, m_max)

    @classmethod
    def empty(cls, vars: Iterable[str]) -> "ProbPoly":
        return cls(Region.empty(vars), 0, 0, ZERO, ZERO, ZERO, ZERO)

    @classmethod
    def uniform(cls, ranges: Mapping[str, tuple[int, int]], per_point: Fraction | None = None) -> "ProbPoly":
        g = Region.from_box(ranges)
        n = g.count().lo
        p = Fraction(1, n) if per_point is None else Fraction(per_point)
        return cls.make(g, n, n, p, p, p * n, p * n)

    @property
    def is_empty(self) -> bool:
        return self.region.is_empty or self.s_max == 0

    @property
    def vars(self) -> frozenset[str]:
        return self.region.vars

    def count(self, budget: int = DEFAULT_BUDGET):
        return self.region.count(budget)

    def with_ornaments(self, **kw) -> "ProbPoly":
        region = kw.pop("region", self.region)
        d = dict(
            s_min=self.s_min, s_max=self.s_max, p_min=self.p_min,
            p_max=self.p_max, m_min=self.m_min, m_max=self.m_max,
        )
        d.update(kw)
        return ProbPoly.make(region, **d)

    def ornaments(self) -> dict:
        return dict(
            s_min=self.s_min, s_max=self.s_max, p_min=self.p_min,
            p_max=self.p_max, m_min=self.m_min, m_max=self.m_max,
        )

    def __str__(self) -> str:
        return (
            f"{self.region} s=[{self.s_min},{self.s_max}] p=[{self.p_min},{self.p_max}] "
            f"m=[{self.m_min},{self.m_max}]"
        )


@dataclass(frozen=True)
class Powerset:
    """Sum of the element distributions.

    ``disjoint`` records that the element supports are pairwise disjoint in
    every concretization (true after splitting on a guard, lost by pif and by
    non-injective assignments).
    """

    elements: tuple[ProbPoly, ...]
    vars: frozenset[str]
    precision: int = 1
    disjoint: bool = True

    @classmethod
    def of(cls, elements: Sequence[ProbPoly], vars: Iterable[str], precision: int, disjoint: bool = True) -> "Powerset":
        elems = tuple(e for e in elements if not e.is_empty)
        return cls(elems, frozenset(vars), precision, disjoint or len(elems) <= 1)

    @classmethod
    def uniform(cls, ranges: Mapping[str, tuple[int, int]], per_point: Fraction | None = None, precision: int = 1) -> "Powerset":
        return cls.of([ProbPoly.uniform(ranges, per_point)], ranges, precision)

    @property
    def is_empty(self) -> bool:
        return not self.elements

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def with_elements(self, elements: Sequence[ProbPoly], disjoint: bool | None = None, vars=None) -> "Powerset":
        return Powerset.of(
            elements,
            self.vars if vars is None else vars,
            self.precision,
            self.disjoint if disjoint is None else disjoint,
        )

    def m_min(self) -> Fraction:
        return sum((e.m_min for e in self.elements), ZERO)

    def m_max(self) -> Fraction:
        return sum((e.m_max for e in self.elements), ZERO)

    def regions(self) -> list[Region]:
        return [e.region for e in self.elements]

    def __str__(self) -> str:
        return "\n".join(str(e) for e in self.elements) or "<empty>"


# -- element-level transfers ---------------------------------------------------


def merge_pair(a: ProbPoly, b: ProbPoly, disjoint: bool, budget: int = DEFAULT_BUDGET) -> ProbPoly:
    """Abstract sum of two elements whose result must be a single region."""
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    g = a.region.join(b.region)
    cj = g.count(budget).hi
    n_ov = a.region.meet_region(b.region).count(budget).hi
    p_max = a.p_max + b.p_max if n_ov > 0 else max(a.p_max, b.p_max)
    if disjoint or n_ov == 0:
        s_min = min(cj, a.s_min + b.s_min)
    else:
        s_min = max(a.s_min, b.s_min)
    return ProbPoly.make(
        g,
        s_min,
        min(cj, a.s_max + b.s_max),
        min(a.p_min, b.p_min),
        p_max,
        a.m_min + b.m_min,
        a.m_max + b.m_max,
        budget,
    )


def _merge_cost(a: ProbPoly, b: ProbPoly, budget: int):
    # definitions lost by the join first, then phantom points it introduces
    da, db = a.region.defs, b.region.defs
    lost = sum(1 for x in set(da) | set(db) if da.get(x) != db.get(x))
    cj = a.region.join(b.region).count(budget).hi
    return lost, cj - a.count(budget).hi - b.count(budget).hi


def reduce_to(P: Powerset, precision: int | None = None, budget: int = DEFAULT_BUDGET) -> Powerset:
    """Merge elements pairwise until at most ``precision`` remain."""
    k = P.precision if precision is None else precision
    elems = [e for e in P.elements if not e.is_empty]
    while len(elems) > max(1, k):
        best = None
        for i, j in itertools.combinations(range(len(elems)), 2):
            c = _merge_cost(elems[i], elems[j], budget)
            if best is None or c < best[0]:
                best = (c, i, j)
        _, i, j = best
        merged = merge_pair(elems[i], elems[j], P.disjoint, budget)
        elems = [e for t, e in enumerate(elems) if t not in (i, j)] + [merged]
    return P.with_elements(elems)


def cond_element(e: ProbPoly, conj, budget: int = DEFAULT_BUDGET) -> ProbPoly:
    return restrict_element(e, e.region.meet(conj), budget)


def restrict_element(e: ProbPoly, g2: Region, budget: int = DEFAULT_BUDGET) -> ProbPoly:
    """Condition ``e`` on the points of ``g2``, a sub-region of its own."""
    g = e.region
    if g2.is_empty:
        return ProbPoly.empty(g.vars)
    n_in = g2.count(budget)
    n_all = g.count(budget)
    out = n_all.hi - n_in.lo
    s_max = min(e.s_max, n_in.hi)
    s_min = max(0, e.s_min - out) if out != INF else 0
    m_max = e.m_max if s_max == INF else min(e.m_max, e.p_max * s_max)
    if out == INF:
        m_min = e.p_min * s_min
    else:
        m_min = max(ZERO, e.m_min - e.p_max * out, e.p_min * s_min)
    return ProbPoly.make(g2, s_min, s_max, e.p_min, e.p_max, m_min, m_max, budget)


def forget_element(e: ProbPoly, x: str, budget: int = DEFAULT_BUDGET) -> tuple[ProbPoly, int | float]:
    g, w = e.region.forget(x)
    if e.is_empty:
        return ProbPoly.empty(g.vars), 1
    if w == 1:
        return ProbPoly.make(g, e.s_min, e.s_max, e.p_min, e.p_max, e.m_min, e.m_max, budget), 1
    p_max = e.m_max if w == INF else min(e.m_max, e.p_max * w)
    s_max = min(e.s_max, g.count(budget).hi)
    return ProbPoly.make(g, _ceil_div(e.s_min, w), s_max, e.p_min, p_max, e.m_min, e.m_max, budget), w


def assign_element(e: ProbPoly, x: str, lin: Linear, budget: int = DEFAULT_BUDGET) -> tuple[ProbPoly, int | float]:
    if e.is_empty:
        vars = e.vars | {x}
        return ProbPoly.empty(vars), 1
    lin_s = lin.subst_all(e.region.defs)
    if x in e.region.box and x not in e.region.defs and lin_s.coeff(x) == 0:
        # old value is lost: forget it, then define the new value injectively
        f, w = forget_element(e, x, budget)
        if f.is_empty:
            return ProbPoly.empty(e.vars), w
        return replace(f, region=f.region.define(x, lin_s)), w
    g, _ = e.region.assign(x, lin)
    return ProbPoly.make(g, e.s_min, e.s_max, e.p_min, e.p_max, e.m_min, e.m_max, budget), 1


# -- powerset transfers ----------------------------------------------------------


def disjoint_pieces(g: Region, dnf, limit: int = DNF_LIMIT) -> list[Region]:
    """Pairwise-disjoint sub-regions of ``g`` covering exactly its points in ``dnf``.

    Disjunct k is cut down by the complements of disjuncts 1..k-1, dropping
    empty pieces as soon as they appear.
    """
    out: list[Region] = []
    for k, conj in enumerate(dnf):
        pieces = [g.meet(conj)]
        for prev in dnf[:k]:
            alts = negate_conj(prev)
            pieces = [h2 for h in pieces for h2 in (h.meet(a) for a in alts) if not h2.is_empty]
            if not pieces:
                break
        out.extend(h for h in pieces if not h.is_empty)
        if len(out) > limit:
            raise DNFExplosion(len(out), limit)
    return out


def t_cond(P: Powerset, b: BoolExpr, limit: int = DNF_LIMIT, budget: int = DEFAULT_BUDGET) -> Powerset:
    dnf = bool_to_dnf(b, limit)
    out = []
    for e in P.elements:
        for g2 in disjoint_pieces(e.region, dnf, limit):
            out.append(restrict_element(e, g2, budget))
    return reduce_to(P.with_elements(out), budget=budget)


def _align(P: Powerset, vars: frozenset[str]) -> Powerset:
    missing = sorted(vars - P.vars)
    if not missing:
        return P
    elems = []
    for e in P.elements:
        g = e.region
        for x in missing:
            # program locals start at zero
            g = g.define(x, Linear.constant(0))
        elems.append(replace(e, region=g))
    return P.with_elements(elems, vars=P.vars | set(missing))


def t_plus(P1: Powerset, P2: Powerset, disjoint: bool, budget: int = DEFAULT_BUDGET) -> Powerset:
    vars = P1.vars | P2.vars
    P1, P2 = _align(P1, vars), _align(P2, vars)
    flag = disjoint and P1.disjoint and P2.disjoint
    if not disjoint and P1.elements and P2.elements:
        # supports may still be disjoint when no two regions meet
        flag = P1.disjoint and P2.disjoint and all(
            a.region.meet_region(b.region).count(budget).hi == 0 for a in P1 for b in P2
        )
    merged = Powerset.of(P1.elements + P2.elements, vars, max(P1.precision, P2.precision), flag)
    return reduce_to(merged, budget=budget)


def t_scale(P: Powerset, q: Fraction) -> Powerset:
    q = Fraction(q)
    return P.with_elements(
        [
            ProbPoly.make(e.region, e.s_min, e.s_max, e.p_min * q, e.p_max * q, e.m_min * q, e.m_max * q)
            for e in P.elements
        ]
    )


def _still_disjoint(elems: Sequence[ProbPoly], budget: int) -> bool:
    # each element's map may be injective while two elements land on the same points
    return all(
        a.region.meet_region(b.region).count(budget).hi == 0
        for i, a in enumerate(elems) for b in elems[i + 1:]
    )


def _common_def(P: Powerset, x: str) -> bool:
    """Whether every element determines ``x`` by the same function of the rest."""
    seen = None
    for e in P.elements:
        g = e.region
        if x in g.defs:
            d = g.defs[x]
        elif g.box[x][0] == g.box[x][1]:
            d = Linear.constant(g.box[x][0])
        else:
            return False
        if seen is not None and d != seen:
            return False
        seen = d
    return True


def _injective_on_union(P: Powerset, x: str, lin: Linear | None = None) -> bool:
    """Whether assigning (or, with no ``lin``, forgetting) ``x`` maps distinct states
    of the union of supports to distinct states."""
    if x not in P.vars:
        return True
    if lin is not None and lin.coeff(x) in (1, -1):
        return True
    return _common_def(P, x)


def t_assign(P: Powerset, x: str, lin: Linear, budget: int = DEFAULT_BUDGET) -> Powerset:
    elems, injective = [], True
    for e in P.elements:
        f, w = assign_element(e, x, lin, budget)
        injective = injective and w == 1
        elems.append(f)
    flag = P.disjoint and (_injective_on_union(P, x, lin) or (injective and _still_disjoint(elems, budget)))
    return reduce_to(P.with_elements(elems, disjoint=flag, vars=P.vars | {x}), budget=budget)


def t_forget(P: Powerset, x: str, budget: int = DEFAULT_BUDGET) -> Powerset:
    if x not in P.vars:
        return P
    elems, injective = [], True
    for e in P.elements:
        f, w = forget_element(e, x, budget)
        injective = injective and w == 1
        elems.append(f)
    flag = P.disjoint and (_injective_on_union(P, x) or (injective and _still_disjoint(elems, budget)))
    return reduce_to(P.with_elements(elems, disjoint=flag, vars=P.vars - {x}), budget=budget)


def t_project(P: Powerset, keep: Iterable[str], budget: int = DEFAULT_BUDGET) -> Powerset:
    keep = set(keep)
    # determined variables first so that their forgetting stays lossless
    order = sorted(P.vars - keep, key=lambda x: (not any(x in e.region.defs for e in P.elements), x))
    for x in order:
        P = t_forget(P, x, budget)
    return P


def summary(P: Powerset, budget: int = DEFAULT_BUDGET) -> ProbPoly:
    """All elements merged into one."""
    return reduce_to(replace(P, precision=1), 1, budget).elements[0] if P.elements else ProbPoly.empty(P.vars)


# -- concretization ------------------------------------------------------------


def element_contains(e: ProbPoly, d: Dist) -> bool:
    """Exact membership of a (sub)distribution in one element's concretization."""
    if not d.probs:
        return e.s_min == 0 and e.m_min == 0
    if e.is_empty:
        return False
    n = 0
    for env, p in d.states():
        if not e.region.contains(env):
            return False
        if not e.p_min <= p <= e.p_max:
            return False
        n += 1
    m = d.mass()
    return e.s_min <= n <= e.s_max and e.m_min <= m <= e.m_max


_MILP_LIMIT = 20_000


def gamma_contains(P: Powerset, d: Dist) -> bool | None:
    """Whether ``d`` is a sum of members of the elements' concretizations.

    Exact (rational) when each support point is covered by at most one
    element; otherwise solved as a mixed-integer feasibility problem with a
    float tolerance. ``None`` means undecided (problem too large).
    """
    if set(d.vars) != set(P.vars):
        raise ValueError(f"domain mismatch: {sorted(d.vars)} vs {sorted(P.vars)}")
    elems = list(P.elements)
    if not elems:
        return not d.probs
    states = list(d.states())
    covers = [[i for i, e in enumerate(elems) if e.region.contains(env)] for env, _ in states]
    if any(not c for c in covers):
        return False
    if all(len(c) == 1 for c in covers):
        parts: list[dict] = [{} for _ in elems]
        for (env, p), c in zip(states, covers):
            parts[c[0]][tuple(env[x] for x in d.vars)] = p
        return all(element_contains(e, Dist(d.vars, part)) for e, part in zip(elems, parts))
    return _gamma_milp(elems, states, covers)


def _gamma_milp(elems, states, covers) -> bool | None:
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint as LC, milp

    pairs = [(k, i) for k, c in enumerate(covers) for i in c]
    if len(pairs) > _MILP_LIMIT:
        return None
    n = len(pairs)
    # variables: x (mass share) then z (support indicator) per (point, element) pair
    rows, lo, hi = [], [], []

    def row():
        r = np.zeros(2 * n)
        rows.append(r)
        return r

    # rescale masses so the solver's absolute tolerances are meaningful
    scale = 1 / min(float(p) for _, p in states if p > 0)
    tol = 1e-9
    for k, (_, p) in enumerate(states):
        r = row()
        for t, (kk, _) in enumerate(pairs):
            if kk == k:
                r[t] = 1
        lo.append(scale * float(p) - tol)
        hi.append(scale * float(p) + tol)
    for t, (k, i) in enumerate(pairs):
        e = elems[i]
        r = row()
        r[t], r[n + t] = 1, -scale * float(e.p_max)
        lo.append(-np.inf)
        hi.append(tol)
        r = row()
        r[t], r[n + t] = 1, -scale * float(e.p_min)
        lo.append(-tol)
        hi.append(np.inf)
    for i, e in enumerate(elems):
        rs, rm = row(), row()
        for t, (_, ii) in enumerate(pairs):
            if ii == i:
                rs[n + t] = 1
                rm[t] = 1
        lo.append(e.s_min)
        hi.append(np.inf if e.s_max == INF else e.s_max)
        lo.append(scale * float(e.m_min) - tol)
        hi.append(scale * float(e.m_max) + tol)
    integrality = np.concatenate([np.zeros(n), np.ones(n)])
    res = milp(
        c=np.zeros(2 * n),
        constraints=LC(np.array(rows), np.array(lo), np.array(hi)),
        integrality=integrality,
        bounds=Bounds(np.zeros(2 * n), np.concatenate([np.full(n, np.inf), np.ones(n)])),
    )
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    return None
