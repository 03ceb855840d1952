"""Linear forms over integer variables and DNF normalization of guards."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .syntax import Abs, And, BinOp, BoolExpr, Expr, Lit, Not, Or, Rel, Var


class NonlinearError(ValueError):
    pass


class DNFExplosion(ValueError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"DNF has at least {count} disjuncts (limit {limit})")
        self.count = count
        self.limit = limit


DNF_LIMIT = 1024


@dataclass(frozen=True)
class Linear:
    """sum(c * x for x, c in coeffs) + const, coefficients non-zero and sorted by name."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(coeffs: Mapping[str, int] | Iterable[tuple[str, int]] = (), const: int = 0) -> "Linear":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, int] = {}
        for x, c in items:
            acc[x] = acc.get(x, 0) + c
        return Linear(tuple(sorted((x, c) for x, c in acc.items() if c)), const)

    @staticmethod
    def var(x: str) -> "Linear":
        return Linear(((x, 1),), 0)

    @staticmethod
    def constant(c: int) -> "Linear":
        return Linear((), c)

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(x for x, _ in self.coeffs)

    def coeff(self, x: str) -> int:
        for y, c in self.coeffs:
            if y == x:
                return c
        return 0

    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Linear") -> "Linear":
        return Linear.of(self.coeffs + other.coeffs, self.const + other.const)

    def __neg__(self) -> "Linear":
        return Linear(tuple((x, -c) for x, c in self.coeffs), -self.const)

    def __sub__(self, other: "Linear") -> "Linear":
        return self + (-other)

    def scale(self, k: int) -> "Linear":
        if k == 0:
            return Linear()
        return Linear(tuple((x, c * k) for x, c in self.coeffs), self.const * k)

    def drop(self, x: str) -> "Linear":
        return Linear(tuple((y, c) for y, c in self.coeffs if y != x), self.const)

    def subst(self, x: str, by: "Linear") -> "Linear":
        a = self.coeff(x)
        if not a:
            return self
        return self.drop(x) + by.scale(a)

    def subst_all(self, env: Mapping[str, "Linear"]) -> "Linear":
        out = Linear.constant(self.const)
        for x, c in self.coeffs:
            out = out + (env[x].scale(c) if x in env else Linear(((x, c),), 0))
        return out

    def eval(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[x] for x, c in self.coeffs)

    def interval(self, box: Mapping[str, tuple]) -> tuple:
        lo = hi = self.const
        for x, c in self.coeffs:
            a, b = box[x]
            if c > 0:
                lo, hi = lo + c * a, hi + c * b
            else:
                lo, hi = lo + c * b, hi + c * a
        return lo, hi

    def __str__(self) -> str:
        parts = []
        for x, c in self.coeffs:
            parts.append(x if c == 1 else f"-{x}" if c == -1 else f"{c}*{x}")
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


@dataclass(frozen=True)
class LinearConstraint:
    """``lhs <= bound`` or ``lhs == bound`` where ``lhs`` has no constant term."""

    lhs: Linear
    op: str  # "<=" or "=="
    bound: int

    @staticmethod
    def le(e: Linear) -> "LinearConstraint":
        """e <= 0, normalised."""
        return LinearConstraint(Linear(e.coeffs), "<=", -e.const).normalized()

    @staticmethod
    def eq(e: Linear) -> "LinearConstraint":
        """e == 0, normalised."""
        return LinearConstraint(Linear(e.coeffs), "==", -e.const).normalized()

    @property
    def vars(self) -> frozenset[str]:
        return self.lhs.vars

    def normalized(self) -> "LinearConstraint":
        if not self.lhs.coeffs:
            return self
        g = 0
        for _, c in self.lhs.coeffs:
            g = math.gcd(g, c)
        if self.op == "==" and self.lhs.coeffs[0][1] < 0:
            return LinearConstraint(-self.lhs, "==", -self.bound).normalized()
        if g == 1:
            return self
        lhs = Linear(tuple((x, c // g) for x, c in self.lhs.coeffs))
        if self.op == "<=":
            return LinearConstraint(lhs, "<=", self.bound // g)
        if self.bound % g:
            return FALSE_CONSTRAINT
        return LinearConstraint(lhs, "==", self.bound // g)

    def truth(self) -> bool | None:
        """Truth value when variable-free, else None."""
        if self.lhs.coeffs:
            return None
        return 0 <= self.bound if self.op == "<=" else self.bound == 0

    def holds(self, env: Mapping[str, int]) -> bool:
        v = self.lhs.eval(env)
        return v <= self.bound if self.op == "<=" else v == self.bound

    def subst_all(self, env: Mapping[str, Linear]) -> "LinearConstraint":
        e = self.lhs.subst_all(env)
        return LinearConstraint(Linear(e.coeffs), self.op, self.bound - e.const).normalized()

    def negate(self) -> list["LinearConstraint"]:
        """Integer complement as a list of mutually exclusive alternatives."""
        if self.op == "<=":
            return [LinearConstraint(-self.lhs, "<=", -self.bound - 1).normalized()]
        return [
            LinearConstraint(self.lhs, "<=", self.bound - 1).normalized(),
            LinearConstraint(-self.lhs, "<=", -self.bound - 1).normalized(),
        ]

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.bound}"


FALSE_CONSTRAINT = LinearConstraint(Linear(), "<=", -1)

Conj = tuple[LinearConstraint, ...]


def linearize(e: Expr) -> Linear:
    """Linear form of an abs-free expression."""
    if isinstance(e, Var):
        return Linear.var(e.name)
    if isinstance(e, Lit):
        return Linear.constant(e.value)
    if isinstance(e, BinOp):
        a, b = linearize(e.left), linearize(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if a.is_const():
            return b.scale(a.const)
        if b.is_const():
            return a.scale(b.const)
        raise NonlinearError(f"non-linear product {e}")
    raise NonlinearError("absolute value must be eliminated before linearization")


def rel_constraints(op: str, left: Linear, right: Linear) -> list[Conj]:
    """DNF (list of conjunctions) of ``left op right`` over the integers."""
    d = left - right
    if op == "<=":
        return [(LinearConstraint.le(d),)]
    if op == "<":
        return [(LinearConstraint.le(d + Linear.constant(1)),)]
    if op == ">=":
        return [(LinearConstraint.le(-d),)]
    if op == ">":
        return [(LinearConstraint.le(-d + Linear.constant(1)),)]
    if op == "==":
        return [(LinearConstraint.eq(d),)]
    if op == "!=":
        return [(LinearConstraint.le(d + Linear.constant(1)),), (LinearConstraint.le(-d + Linear.constant(1)),)]
    raise ValueError(f"unknown relation {op!r}")


_NEG_REL = {"<=": ">", "<": ">=", ">=": "<", ">": "<=", "==": "!=", "!=": "=="}


def _first_abs(e: Expr) -> Abs | None:
    """Innermost-first search for an absolute-value node."""
    if isinstance(e, BinOp):
        return _first_abs(e.left) or _first_abs(e.right)
    if isinstance(e, Abs):
        return _first_abs(e.arg) or e
    return None


def _replace(e: Expr, target: Abs, by: Expr) -> Expr:
    if e is target:
        return by
    if isinstance(e, BinOp):
        return BinOp(e.op, _replace(e.left, target, by), _replace(e.right, target, by))
    if isinstance(e, Abs):
        return Abs(_replace(e.arg, target, by))
    return e


def expand_abs_rel(r: Rel) -> BoolExpr:
    """Rewrite a relation containing |E| into abs-free sign cases."""
    a = _first_abs(r.left) or _first_abs(r.right)
    if a is None:
        return r
    pos = Rel(r.op, _replace(r.left, a, a.arg), _replace(r.right, a, a.arg))
    neg_e = BinOp("-", Lit(0), a.arg)
    neg = Rel(r.op, _replace(r.left, a, neg_e), _replace(r.right, a, neg_e))
    return Or(
        And(Rel(">=", a.arg, Lit(0)), expand_abs_rel(pos)),
        And(Rel("<", a.arg, Lit(0)), expand_abs_rel(neg)),
    )


def _simplify_conj(conj: Iterable[LinearConstraint]) -> Conj | None:
    """Drop tautologies and duplicates; None when a literal is false."""
    out: list[LinearConstraint] = []
    for c in conj:
        t = c.truth()
        if t is True:
            continue
        if t is False:
            return None
        if c not in out:
            out.append(c)
    return tuple(out)


def _product(a: list[Conj], b: list[Conj], limit: int) -> list[Conj]:
    out = []
    for x in a:
        for y in b:
            c = _simplify_conj(x + y)
            if c is not None:
                out.append(c)
                if len(out) > limit:
                    raise DNFExplosion(len(out), limit)
    return out


def bool_to_dnf(b: BoolExpr, limit: int = DNF_LIMIT, negate: bool = False) -> list[Conj]:
    """Disjunction of conjunctions of linear constraints equivalent to ``b`` over Z.

    Absolute values are expanded into sign cases. ``[]`` is unsatisfiable and
    ``[()]`` is valid.
    """
    if isinstance(b, Not):
        return bool_to_dnf(b.arg, limit, not negate)
    if isinstance(b, Rel):
        if negate:
            b = Rel(_NEG_REL[b.op], b.left, b.right)
        expanded = expand_abs_rel(b)
        if expanded is not b:
            return bool_to_dnf(expanded, limit)
        out = []
        for conj in rel_constraints(b.op, linearize(b.left), linearize(b.right)):
            c = _simplify_conj(conj)
            if c is not None:
                out.append(c)
        return out
    conjunctive = isinstance(b, And) != negate
    left = bool_to_dnf(b.left, limit, negate)
    right = bool_to_dnf(b.right, limit, negate)
    if conjunctive:
        return _product(left, right, limit)
    out = left + [c for c in right if c not in left]
    if len(out) > limit:
        raise DNFExplosion(len(out), limit)
    return out


def negate_conj(conj: Conj) -> list[Conj]:
    """Complement of a conjunction as pairwise-disjoint conjunctions."""
    out: list[Conj] = []
    prefix: list[LinearConstraint] = []
    for c in conj:
        for alt in c.negate():
            s = _simplify_conj(prefix + [alt])
            if s is not None:
                out.append(s)
        prefix.append(c)
    return out


def disjoint_dnf(b: BoolExpr, limit: int = DNF_LIMIT, negate: bool = False) -> list[Conj]:
    """Like ``bool_to_dnf`` but the disjuncts have pairwise-disjoint solution sets.

    Disjunct k is conjoined with the complement of disjuncts 1..k-1.
    """
    dnf = bool_to_dnf(b, limit, negate)
    out: list[Conj] = []
    for k, d in enumerate(dnf):
        pieces: list[Conj] = [d]
        for prev in dnf[:k]:
            pieces = _product(pieces, negate_conj(prev), limit)
            if not pieces:
                break
        out.extend(pieces)
        if len(out) > limit:
            raise DNFExplosion(len(out), limit)
    return out


def conj_holds(conj: Conj, env: Mapping[str, int]) -> bool:
    return all(c.holds(env) for c in conj)


def dnf_holds(dnf: list[Conj], env: Mapping[str, int]) -> bool:
    return any(conj_holds(c, env) for c in dnf)
