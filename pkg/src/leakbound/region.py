"""Integer boxes reduced with affine definitions and residual linear constraints.

A region is the set of integer states such that

* every *base* variable lies in its interval,
* every *defined* variable equals its affine definition over base variables
  and lies in its own interval,
* every residual constraint (over base variables) holds.

Counting enumerates all but one variable of each connected block of
constraints and solves the last variable's interval in closed form.
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .linear import Conj, Linear, LinearConstraint

INF = math.inf
Bound = "int | float"
DEFAULT_BUDGET = 10**7
_PROPAGATION_ROUNDS = 64


def _fdiv(n, a: int):
    if n in (INF, -INF):
        return n if a > 0 else -n
    return n // a


def _cdiv(n, a: int):
    if n in (INF, -INF):
        return n if a > 0 else -n
    return -((-n) // a)


def _width(lo, hi):
    if lo > hi:
        return 0
    if lo == -INF or hi == INF:
        return INF
    return hi - lo + 1


@dataclass(frozen=True)
class Count:
    """Point count of a region: exact when ``lo == hi``."""

    lo: int | float
    hi: int | float

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    @staticmethod
    def of(n: int) -> "Count":
        return Count(n, n)

    def __str__(self) -> str:
        return str(self.lo) if self.exact else f"[{self.lo}, {self.hi}]"


# a range constraint lo <= lin <= hi over base variables
_Range = tuple[Linear, "int | float", "int | float"]


def _merge_ranges(ranges: list[_Range]) -> list[_Range] | None:
    """Intersect ranges over the same linear form up to sign and scale.

    Opposing bounds on one form otherwise narrow the box one step per
    propagation round. ``None`` when some form has an empty range.
    """
    merged: dict[tuple, list] = {}
    for lin, lo, hi in ranges:
        lo, hi = lo - lin.const, hi - lin.const
        coeffs = lin.coeffs
        if coeffs and coeffs[0][1] < 0:
            coeffs = tuple((x, -a) for x, a in coeffs)
            lo, hi = -hi, -lo
        g = math.gcd(*(abs(a) for _, a in coeffs)) if coeffs else 1
        if g > 1:
            coeffs = tuple((x, a // g) for x, a in coeffs)
            lo = lo if lo == -INF else _cdiv(lo, g)
            hi = hi if hi == INF else _fdiv(hi, g)
        if coeffs in merged:
            cur = merged[coeffs]
            cur[0], cur[1] = max(cur[0], lo), min(cur[1], hi)
        else:
            merged[coeffs] = [lo, hi]
    out = []
    for coeffs, (lo, hi) in merged.items():
        if lo > hi:
            return None
        out.append((Linear(coeffs), lo, hi))
    return out


class Region:
    __slots__ = ("box", "defs", "residuals", "is_empty", "_tables", "_count")

    def __init__(
        self,
        box: Mapping[str, tuple],
        defs: Mapping[str, Linear] | None = None,
        residuals: Iterable[LinearConstraint] = (),
        empty: bool = False,
    ):
        self.box: dict[str, tuple] = dict(box)
        self.defs: dict[str, Linear] = dict(defs or {})
        self.residuals: tuple[LinearConstraint, ...] = tuple(residuals)
        self.is_empty = empty or any(lo > hi for lo, hi in self.box.values())
        self._tables = None
        self._count: dict[int, Count] = {}

    # -- construction -------------------------------------------------------
    @classmethod
    def from_box(cls, ranges: Mapping[str, tuple]) -> "Region":
        return cls(ranges)

    @classmethod
    def empty(cls, vars: Iterable[str]) -> "Region":
        return cls({x: (0, -1) for x in vars}, empty=True)

    def _replace(self, **kw) -> "Region":
        return Region(
            kw.get("box", self.box),
            kw.get("defs", self.defs),
            kw.get("residuals", self.residuals),
            kw.get("empty", False),
        )

    # -- basic queries ------------------------------------------------------
    @property
    def vars(self) -> frozenset[str]:
        return frozenset(self.box)

    @property
    def base_vars(self) -> list[str]:
        return sorted(x for x in self.box if x not in self.defs)

    def key(self) -> tuple:
        if self.is_empty:
            return ("empty", tuple(sorted(self.box)))
        return (
            tuple(sorted(self.box.items())),
            tuple(sorted(self.defs.items())),
            tuple(sorted(self.residuals, key=str)),
        )

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Region) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        if self.is_empty:
            return "Region(empty)"
        parts = [f"{x}∈[{lo},{hi}]" for x, (lo, hi) in sorted(self.box.items())]
        parts += [f"{x}={e}" for x, e in sorted(self.defs.items())]
        parts += [str(c) for c in self.residuals]
        return "Region(" + ", ".join(parts) + ")"

    def box_points(self):
        n = 1
        for x in self.base_vars:
            n *= _width(*self.box[x])
        return n

    def points(self):
        """Every integer point, by brute force over the base box."""
        if self.is_empty:
            return
        base = self.base_vars
        if any(_width(*self.box[x]) == INF for x in base):
            raise ValueError("cannot enumerate an unbounded region")
        for vals in itertools.product(*(range(self.box[x][0], self.box[x][1] + 1) for x in base)):
            env = dict(zip(base, vals))
            for x, e in self.defs.items():
                env[x] = e.eval(env)
            if self.contains(env):
                yield env

    def contains(self, env: Mapping[str, int]) -> bool:
        if self.is_empty:
            return False
        for x, (lo, hi) in self.box.items():
            v = env[x]
            if not lo <= v <= hi:
                return False
        for x, e in self.defs.items():
            if env[x] != e.eval(env):
                return False
        return all(c.holds(env) for c in self.residuals)

    def interval_of(self, lin: Linear) -> tuple:
        return lin.subst_all(self.defs).interval(self.box)

    # -- constraint plumbing ------------------------------------------------
    def _ranges(self) -> list[_Range]:
        out: list[_Range] = []
        for c in self.residuals:
            if c.op == "<=":
                out.append((c.lhs, -INF, c.bound))
            else:
                out.append((c.lhs, c.bound, c.bound))
        for x, e in self.defs.items():
            lo, hi = self.box[x]
            elo, ehi = e.interval(self.box)
            if elo < lo or ehi > hi:
                out.append((e, lo, hi))
        return _merge_ranges(out)

    def normalize(self) -> "Region":
        """Tighten intervals by bound propagation; canonical empty on infeasibility."""
        if self.is_empty:
            return Region.empty(self.box)
        box = dict(self.box)
        ranges = self._ranges()
        if ranges is None:
            return Region.empty(self.box)
        for _ in range(_PROPAGATION_ROUNDS):
            changed = False
            for lin, lo, hi in ranges:
                tl, th = lin.interval(box)
                if th < lo or tl > hi:
                    return Region.empty(self.box)
                for x, a in lin.coeffs:
                    xl, xh = box[x]
                    # interval of lin without the a*x term
                    if a > 0:
                        sl, sh = tl - a * xl if xl != -INF else None, th - a * xh if xh != INF else None
                    else:
                        sl, sh = tl - a * xh if xh != INF else None, th - a * xl if xl != -INF else None
                    if sl is None or sh is None:
                        sl, sh = lin.drop(x).interval(box)
                    if a > 0:
                        nl, nh = _cdiv(lo - sh, a), _fdiv(hi - sl, a)
                    else:
                        nl, nh = _cdiv(hi - sl, a), _fdiv(lo - sh, a)
                    nl, nh = max(xl, nl), min(xh, nh)
                    if nl > nh:
                        return Region.empty(self.box)
                    if (nl, nh) != (xl, xh):
                        box[x] = (nl, nh)
                        changed = True
                        tl, th = lin.interval(box)
            if not changed:
                break
        for x, e in self.defs.items():
            lo, hi = box[x]
            elo, ehi = e.interval(box)
            lo, hi = max(lo, elo), min(hi, ehi)
            if lo > hi:
                return Region.empty(self.box)
            box[x] = (lo, hi)
        residuals = []
        for c in self.residuals:
            lo, hi = c.lhs.interval(box)
            if c.op == "<=" and hi <= c.bound:
                continue
            if c.op == "==" and lo == hi == c.bound:
                continue
            if c not in residuals:
                residuals.append(c)
        return Region(box, self.defs, residuals)

    def _substitute_base(self, x: str, by: Linear) -> tuple[dict[str, Linear], list[LinearConstraint]]:
        """Defs and residuals with base variable ``x`` replaced by ``by``."""
        env = {x: by}
        defs = {y: e.subst_all(env) for y, e in self.defs.items()}
        residuals = []
        for c in self.residuals:
            c2 = c.subst_all(env)
            t = c2.truth()
            if t is False:
                return defs, [c2]
            if t is None:
                residuals.append(c2)
        return defs, residuals

    def meet(self, conj: Sequence[LinearConstraint]) -> "Region":
        """Intersection with a conjunction of linear constraints over this region's variables."""
        if self.is_empty:
            return self
        r = self
        for c in conj:
            r = r._meet_one(c)
            if r.is_empty:
                return Region.empty(self.box)
        return r.normalize()

    def _meet_one(self, c: LinearConstraint) -> "Region":
        c = c.subst_all(self.defs)
        t = c.truth()
        if t is True:
            return self
        if t is False:
            return Region.empty(self.box)
        if c.op == "==":
            pivots = [(x, a) for x, a in c.lhs.coeffs if a in (1, -1)]
            if pivots:
                x, a = max(pivots, key=lambda p: (_width(*self.box[p[0]]), p[0]))
                # a*x + rest = bound  =>  x = a*(bound - rest)
                by = (Linear.constant(c.bound) - c.lhs.drop(x)).scale(a)
                defs, residuals = self._substitute_base(x, by)
                if residuals and residuals[0].truth() is False:
                    return Region.empty(self.box)
                defs[x] = by
                return Region(self.box, defs, residuals)
        return Region(self.box, self.defs, self.residuals + (c,))

    def meet_region(self, other: "Region") -> "Region":
        if self.is_empty or other.is_empty:
            return Region.empty(self.box)
        box = {}
        for x, (lo, hi) in self.box.items():
            olo, ohi = other.box.get(x, (-INF, INF))
            box[x] = (max(lo, olo), min(hi, ohi))
        r = self._replace(box=box)
        if r.is_empty:
            return Region.empty(self.box)
        cons = [LinearConstraint.eq(Linear.var(x) - e) for x, e in other.defs.items()]
        return r.meet(cons + list(other.residuals))

    def join(self, other: "Region") -> "Region":
        """Interval hull; only identical definitions survive, residuals are dropped."""
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        box = {}
        for x in self.box:
            a, b = self.box[x], other.box[x]
            box[x] = (min(a[0], b[0]), max(a[1], b[1]))
        defs = {x: e for x, e in self.defs.items() if other.defs.get(x) == e}
        return Region(box, defs).normalize()

    # -- variable management ------------------------------------------------
    def add_var(self, x: str, lo, hi) -> "Region":
        box = dict(self.box)
        box[x] = (lo, hi)
        return self._replace(box=box, empty=self.is_empty)

    def define(self, x: str, lin: Linear) -> "Region":
        """Add fresh variable ``x`` equal to ``lin``."""
        assert x not in self.box
        if self.is_empty:
            return Region.empty(set(self.box) | {x})
        e = lin.subst_all(self.defs)
        box = dict(self.box)
        box[x] = e.interval(self.box)
        defs = dict(self.defs)
        defs[x] = e
        return Region(box, defs, self.residuals)

    def rename(self, old: str, new: str) -> "Region":
        env = {old: Linear.var(new)}
        box = {(new if x == old else x): v for x, v in self.box.items()}
        defs = {(new if x == old else x): e.subst_all(env) for x, e in self.defs.items()}
        residuals = [c.subst_all(env) for c in self.residuals]
        return Region(box, defs, residuals, self.is_empty)

    def forget(self, x: str) -> tuple["Region", "int | float"]:
        """Existential projection of ``x``.

        Returns the projected region and the largest number of ``x`` values
        that a single valuation of the remaining variables can pair with.
        """
        if x not in self.box:
            return self, 1
        if self.is_empty:
            box = dict(self.box)
            del box[x]
            return Region.empty(box), 1
        r = self
        if x not in r.defs:
            pivot = None
            for d, e in sorted(r.defs.items()):
                a = e.coeff(x)
                if a in (1, -1):
                    pivot = (d, a, e)
                    break
            if pivot is not None:
                d, a, e = pivot
                # d = a*x + rest  =>  x = a*(d - rest)
                by = (Linear.var(d) - e.drop(x)).scale(a)
                defs, residuals = r._substitute_base(x, by)
                del defs[d]
                defs[x] = by
                r = Region(r.box, defs, residuals)
        if x in r.defs:
            return r._drop_defined(x), 1
        return r._eliminate_base(x), _width(*r.box[x])

    def _drop_defined(self, x: str) -> "Region":
        e = self.defs[x]
        lo, hi = self.box[x]
        elo, ehi = e.interval(self.box)
        extra = []
        if ehi > hi:
            extra.append(LinearConstraint(Linear(e.coeffs), "<=", hi - e.const).normalized())
        if elo < lo:
            extra.append(LinearConstraint(Linear((-e).coeffs), "<=", e.const - lo).normalized())
        box = dict(self.box)
        del box[x]
        defs = dict(self.defs)
        del defs[x]
        extra = [c for c in extra if c.truth() is not True]
        if any(c.truth() is False for c in extra):
            return Region.empty(box)
        return Region(box, defs, self.residuals + tuple(extra)).normalize()

    def _eliminate_base(self, x: str) -> "Region":
        # dependents lose their definitions and become base variables tied by equalities
        defs = dict(self.defs)
        cons: list[LinearConstraint] = list(self.residuals)
        for d, e in self.defs.items():
            if e.coeff(x):
                del defs[d]
                cons.append(LinearConstraint.eq(Linear.var(d) - e))
        box = dict(self.box)
        xlo, xhi = box.pop(x)
        keep, pos, neg = [], [], []
        for c in cons:
            forms = [(c.lhs, c.bound)] if c.op == "<=" else [(c.lhs, c.bound), (-c.lhs, -c.bound)]
            for lhs, b in forms:
                a = lhs.coeff(x)
                if a > 0:
                    pos.append((lhs, b))
                elif a < 0:
                    neg.append((lhs, b))
                else:
                    keep.append(LinearConstraint(lhs, "<=", b).normalized())
        if xhi != INF:
            pos.append((Linear.var(x), xhi))
        if xlo != -INF:
            neg.append((-Linear.var(x), -xlo))
        # Fourier-Motzkin: real shadow, a superset of the integer projection
        for (lp, bp), (ln, bn) in itertools.product(pos, neg):
            ap, an = lp.coeff(x), -ln.coeff(x)
            lhs = lp.scale(an) + ln.scale(ap)
            c = LinearConstraint(lhs.drop(x), "<=", bp * an + bn * ap).normalized()
            t = c.truth()
            if t is False:
                return Region.empty(box)
            if t is None and c not in keep:
                keep.append(c)
        return Region(box, defs, [c for c in keep if c.truth() is None]).normalize()

    def project(self, keep: Iterable[str]) -> "Region":
        keep = set(keep)
        r = self
        for x in sorted(self.defs, key=lambda v: v in keep):
            if x not in keep and x in r.box:
                r, _ = r.forget(x)
        for x in sorted(r.box):
            if x not in keep:
                r, _ = r.forget(x)
        return r

    def assign(self, x: str, lin: Linear) -> tuple["Region", "int | float"]:
        """Region after ``x := lin``; second value is 1 when the map is injective,
        else the number of old ``x`` values that may collapse onto one state."""
        if self.is_empty:
            return self, 1
        e = lin.subst_all(self.defs)
        if x not in self.box:
            return self.define(x, e), 1
        if x in self.defs:
            return self._drop_defined(x).define(x, e), 1
        a = e.coeff(x)
        if a == 0:
            r, w = self.forget(x)
            return r.define(x, e), w
        if a in (1, -1):
            rest = e.drop(x)
            # old x = a*(new x - rest)
            by = (Linear.var(x) - rest).scale(a)
            defs, residuals = self._substitute_base(x, by)
            lo, hi = self.box[x]
            box = dict(self.box)
            box[x] = e.interval(self.box)
            extra = []
            if hi != INF:
                extra.append(LinearConstraint.le(by - Linear.constant(hi)))
            if lo != -INF:
                extra.append(LinearConstraint.le(Linear.constant(lo) - by))
            extra = [c for c in extra if c.truth() is not True]
            return Region(box, defs, tuple(residuals) + tuple(extra)).normalize(), 1
        tmp = x + "#old"
        r = self.rename(x, tmp)
        r = r.define(x, e.subst_all({x: Linear.var(tmp)}))
        r, _ = r.forget(tmp)
        return r, 1

    # -- counting -----------------------------------------------------------
    def _blocks(self):
        """Connected blocks of base variables with the range constraints touching them."""
        ranges = self._ranges()
        if ranges is None:
            return [], False
        parent = {x: x for x in self.base_vars}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for lin, _, _ in ranges:
            vs = [x for x, _ in lin.coeffs]
            for v in vs[1:]:
                parent[find(v)] = find(vs[0])
        blocks: dict[str, tuple[list[str], list[_Range]]] = {}
        for x in self.base_vars:
            blocks.setdefault(find(x), ([], []))[0].append(x)
        consts_ok = True
        for lin, lo, hi in ranges:
            if not lin.coeffs:
                consts_ok = consts_ok and lo <= lin.const <= hi
                continue
            blocks[find(lin.coeffs[0][0])][1].append((lin, lo, hi))
        return list(blocks.values()), consts_ok

    def count(self, budget: int = DEFAULT_BUDGET) -> Count:
        if budget in self._count:
            return self._count[budget]
        r = self.normalize()
        c = r._count_normalized(budget)
        self._count[budget] = c
        return c

    def _count_normalized(self, budget: int) -> Count:
        if self.is_empty:
            return Count.of(0)
        blocks, ok = self._blocks()
        if not ok:
            return Count.of(0)
        exact = True
        lo_total, hi_total = 1, 1
        for vars_, ranges in blocks:
            if not ranges:
                n = 1
                for x in vars_:
                    n *= _width(*self.box[x])
                lo_total *= n
                hi_total *= n
                continue
            table = _block_table(vars_, ranges, self.box, budget)
            if table is None:
                exact = False
                n = 1
                for x in vars_:
                    n *= _width(*self.box[x])
                lo_total = 0
                hi_total *= n
            else:
                n = table.total
                lo_total *= n
                hi_total *= n
            if hi_total == 0:
                return Count.of(0)
        if not exact:
            return Count(0, hi_total)
        return Count.of(lo_total)

    # -- sampling -----------------------------------------------------------
    def sampler(self, budget: int = DEFAULT_BUDGET) -> "RegionSampler":
        if self._tables is None:
            self._tables = RegionSampler(self.normalize(), budget)
        return self._tables

    def sample(self, rng: random.Random) -> dict[str, int]:
        return self.sampler().draw(rng)


class _BlockTable:
    """Cumulative counts over prefix assignments of one constraint block."""

    def __init__(self, prefix_vars, last, prefixes, intervals, cumulative):
        self.prefix_vars = prefix_vars
        self.last = last
        self.prefixes = prefixes
        self.intervals = intervals
        self.cumulative = cumulative

    @property
    def total(self) -> int:
        return self.cumulative[-1] if self.cumulative else 0

    def draw(self, rng: random.Random, out: dict[str, int]) -> None:
        k = rng.randrange(self.total)
        i = bisect.bisect_right(self.cumulative, k)
        before = self.cumulative[i - 1] if i else 0
        for x, v in zip(self.prefix_vars, self.prefixes[i]):
            out[x] = v
        out[self.last] = self.intervals[i][0] + (k - before)


def _block_table(vars_: list[str], ranges: list[_Range], box, budget: int) -> _BlockTable | None:
    if any(_width(*box[x]) == INF for x in vars_):
        return None
    last = max(vars_, key=lambda x: (_width(*box[x]), x))
    prefix_vars = [x for x in vars_ if x != last]
    size = 1
    for x in prefix_vars:
        size *= _width(*box[x])
    if size > budget:
        return None
    llo, lhi = box[last]
    # per range: coefficient on the last variable and prefix coefficients
    compiled = []
    for lin, lo, hi in ranges:
        a = lin.coeff(last)
        pre = [(prefix_vars.index(x), c) for x, c in lin.coeffs if x != last]
        compiled.append((a, pre, lin.const, lo, hi))
    prefixes, intervals, cumulative = [], [], []
    total = 0
    axes = [range(box[x][0], box[x][1] + 1) for x in prefix_vars]
    for point in itertools.product(*axes):
        lo_, hi_ = llo, lhi
        for a, pre, const, lo, hi in compiled:
            s = const
            for i, c in pre:
                s += c * point[i]
            if a == 0:
                if s < lo or s > hi:
                    hi_ = lo_ - 1
                    break
                continue
            # lo <= a*v + s <= hi
            if a > 0:
                if lo != -INF:
                    lo_ = max(lo_, -((s - lo) // a))
                if hi != INF:
                    hi_ = min(hi_, (hi - s) // a)
            else:
                if hi != INF:
                    lo_ = max(lo_, _cdiv(hi - s, a))
                if lo != -INF:
                    hi_ = min(hi_, _fdiv(lo - s, a))
            if lo_ > hi_:
                break
        if lo_ <= hi_:
            total += hi_ - lo_ + 1
            prefixes.append(point)
            intervals.append((lo_, hi_))
            cumulative.append(total)
    return _BlockTable(prefix_vars, last, prefixes, intervals, cumulative)


class RegionSampler:
    """Exact uniform sampler over the integer points of a region."""

    def __init__(self, region: Region, budget: int = DEFAULT_BUDGET):
        if region.is_empty:
            raise ValueError("cannot sample from an empty region")
        self.region = region
        blocks, ok = region._blocks()
        if not ok:
            raise ValueError("cannot sample from an empty region")
        self.free: list[tuple[str, int, int]] = []
        self.tables: list[_BlockTable] = []
        for vars_, ranges in blocks:
            if not ranges:
                for x in vars_:
                    lo, hi = region.box[x]
                    if _width(lo, hi) == INF:
                        raise ValueError(f"unbounded variable {x}")
                    self.free.append((x, lo, hi))
                continue
            t = _block_table(vars_, ranges, region.box, budget)
            if t is None:
                raise ValueError("region too large to sample exactly")
            if t.total == 0:
                raise ValueError("cannot sample from an empty region")
            self.tables.append(t)
        self.defs = list(region.defs.items())

    def draw(self, rng: random.Random) -> dict[str, int]:
        out: dict[str, int] = {}
        for x, lo, hi in self.free:
            out[x] = rng.randint(lo, hi)
        for t in self.tables:
            t.draw(rng, out)
        for x, e in self.defs:
            out[x] = e.eval(out)
        return out


def count_region(g: Region, budget: int = DEFAULT_BUDGET) -> Count:
    return g.count(budget)


def meet_constraints(g: Region, cs: Conj) -> Region:
    return g.meet(cs)


def join_boxes(g1: Region, g2: Region) -> Region:
    return g1.join(g2)


def uniform_sample_region(g: Region, rng: random.Random) -> dict[str, int]:
    return g.sample(rng)


_IE_TERM_LIMIT = 1 << 14


def count_union(gs: Sequence[Region], budget: int = DEFAULT_BUDGET) -> Count:
    """Cardinality of the union by inclusion-exclusion over non-empty intersections."""
    gs = [g for g in gs if not g.is_empty and g.count(budget).hi > 0]
    if not gs:
        return Count.of(0)
    if len(gs) == 1:
        return gs[0].count(budget)
    total = 0
    terms = 0
    inexact = False

    def rec(start: int, current: Region | None, sign: int) -> None:
        nonlocal total, terms, inexact
        for j in range(start, len(gs)):
            inter = gs[j] if current is None else current.meet_region(gs[j])
            c = inter.count(budget)
            if c.hi == 0:
                continue
            terms += 1
            if terms > _IE_TERM_LIMIT or not c.exact:
                inexact = True
                return
            total += sign * c.lo
            rec(j + 1, inter, -sign)
            if inexact:
                return

    rec(0, None, 1)
    if inexact:
        lo = max(g.count(budget).lo for g in gs)
        hi = sum(g.count(budget).hi for g in gs)
        hull = gs[0]
        for g in gs[1:]:
            hull = hull.join(g)
        return Count(lo, min(hi, hull.count(budget).hi))
    return Count.of(total)


def count_union_enum(gs: Sequence[Region], budget: int = DEFAULT_BUDGET) -> Count:
    """Union count by enumerating the hull and testing membership."""
    gs = [g for g in gs if not g.is_empty]
    if not gs:
        return Count.of(0)
    hull = gs[0]
    for g in gs[1:]:
        hull = hull.join(g)
    box = Region(hull.box)
    if box.box_points() > budget:
        return Count(0, box.box_points())
    names = sorted(box.box)
    n = 0
    for point in itertools.product(*(range(lo, hi + 1) for lo, hi in (box.box[x] for x in names))):
        env = dict(zip(names, point))
        if any(g.contains(env) for g in gs):
            n += 1
    return Count.of(n)
