"""Abstract interpreter over powersets of probabilistic polyhedra."""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Iterable

from .concrete import eliminate_abs
from .linear import DNF_LIMIT, linearize
from .probpoly import (
    ONE,
    ZERO,
    Powerset,
    ProbPoly,
    reduce_to,
    t_assign,
    t_cond,
    t_forget,
    t_plus,
    t_project,
    t_scale,
)
from .region import DEFAULT_BUDGET, INF, Region
from .syntax import (
    Assign,
    BoolExpr,
    If,
    Not,
    PIf,
    Rel,
    Seq,
    Skip,
    Stmt,
    Var,
    Lit,
    While,
    assigned_vars,
    bool_vars,
    expr_vars,
    flatten_seq,
    stmt_vars,
)

DEFAULT_UNROLL = 64


def live_before(s: Stmt, live_after: frozenset[str]) -> frozenset[str]:
    if isinstance(s, Skip):
        return live_after
    if isinstance(s, Assign):
        return (live_after - {s.var}) | expr_vars(s.expr)
    if isinstance(s, Seq):
        return live_before(s.first, live_before(s.second, live_after))
    if isinstance(s, If):
        return bool_vars(s.cond) | live_before(s.then, live_after) | live_before(s.orelse, live_after)
    if isinstance(s, PIf):
        return live_before(s.then, live_after) | live_before(s.orelse, live_after)
    if isinstance(s, While):
        live = live_after | bool_vars(s.cond)
        while True:
            nxt = live | live_before(s.body, live)
            if nxt == live:
                return live
            live = nxt
    raise TypeError(f"unknown statement {s!r}")


class _Interp:
    def __init__(self, keep: frozenset[str], unroll: int, budget: int, dnf_limit: int):
        self.keep = keep
        self.unroll = unroll
        self.budget = budget
        self.dnf_limit = dnf_limit

    def prune(self, P: Powerset, live: frozenset[str]) -> Powerset:
        for x in sorted(P.vars - live - self.keep):
            P = t_forget(P, x, self.budget)
        return P

    def run(self, s: Stmt, P: Powerset, live_after: frozenset[str]) -> Powerset:
        if P.is_empty or isinstance(s, Skip):
            return P
        if isinstance(s, Assign):
            return t_assign(P, s.var, linearize(s.expr), self.budget)
        if isinstance(s, Seq):
            stmts = flatten_seq(s)
            lives = [live_after]
            for t in reversed(stmts[1:]):
                lives.append(live_before(t, lives[-1]))
            lives.reverse()
            for t, live in zip(stmts, lives):
                P = self.prune(self.run(t, P, live), live)
            return P
        if isinstance(s, If):
            yes = self.run(s.then, self.cond(P, s.cond), live_after)
            no = self.run(s.orelse, self.cond(P, Not(s.cond)), live_after)
            # branch outputs stay apart only while the guard's variables are untouched
            guard = bool_vars(s.cond)
            apart = not (guard & (assigned_vars(s.then) | assigned_vars(s.orelse))) and guard <= (live_after | self.keep)
            return self.prune(t_plus(self.prune(yes, live_after), self.prune(no, live_after), apart, self.budget), live_after)
        if isinstance(s, PIf):
            a = self.prune(self.run(s.then, t_scale(P, s.prob), live_after), live_after)
            b = self.prune(self.run(s.orelse, t_scale(P, ONE - s.prob), live_after), live_after)
            return t_plus(a, b, False, self.budget)
        if isinstance(s, While):
            return self.loop(s, P, live_after)
        raise TypeError(f"unknown statement {s!r}")

    def cond(self, P: Powerset, b: BoolExpr) -> Powerset:
        return t_cond(P, b, self.dnf_limit, self.budget)

    def loop(self, s: While, P: Powerset, live_after: frozenset[str]) -> Powerset:
        live = live_before(s, live_after)
        done = Powerset.of([], P.vars, P.precision)
        for _ in range(self.unroll):
            # exits from different iterations may coincide
            done = t_plus(done, self.cond(P, Not(s.cond)), False, self.budget)
            P = self.prune(self.run(s.body, self.cond(P, s.cond), live), live)
            if P.is_empty:
                return done
        # widen: whatever mass is still looping ends up anywhere
        vars = P.vars | done.vars
        top = ProbPoly.make(Region({x: (-INF, INF) for x in vars}), 0, INF, ZERO, ONE, ZERO, P.m_max())
        widened = Powerset.of([top], vars, P.precision, False)
        return t_plus(done, self.cond(widened, Not(s.cond)), False, self.budget)


def ai_run(
    s: Stmt,
    P: Powerset,
    precision: int | None = None,
    unroll: int = DEFAULT_UNROLL,
    keep: Iterable[str] | None = None,
    budget: int = DEFAULT_BUDGET,
    dnf_limit: int = DNF_LIMIT,
) -> Powerset:
    """Abstract semantics of ``s`` from ``P``.

    Variables outside ``keep`` (default: everything) are forgotten as soon as
    they are dead, which keeps merges from blurring unrelated temporaries.
    """
    if precision is not None:
        P = replace(P, precision=precision)
    s = eliminate_abs(s)
    keep_set = frozenset(stmt_vars(s) | P.vars) if keep is None else frozenset(keep)
    interp = _Interp(keep_set, unroll, budget, dnf_limit)
    # locals read before being written start at zero, as in the concrete semantics
    for x in sorted(live_before(s, keep_set) - P.vars):
        P = t_assign(P, x, linearize(Lit(0)), budget)
    return interp.prune(interp.run(s, P, keep_set), keep_set)


def abstract_posterior(
    s: Stmt,
    prior: Powerset,
    r: str,
    o: int,
    secrets: Iterable[str],
    precision: int | None = None,
    unroll: int = DEFAULT_UNROLL,
    budget: int = DEFAULT_BUDGET,
) -> Powerset:
    """(⟦s⟧ prior ∧ r = o) projected onto ``secrets``."""
    secrets = frozenset(secrets)
    P = ai_run(s, prior, precision, unroll, keep=secrets | {r}, budget=budget)
    P = t_cond(P, Rel("==", Var(r), Lit(o)), budget=budget)
    return t_project(P, secrets, budget)


def output_values(P: Powerset, r: str, limit: int = 4096) -> list[int] | None:
    """Integer values ``r`` may take in ``P``; None when more than ``limit``."""
    vals: set[int] = set()
    for e in P.elements:
        lo, hi = e.region.box[r]
        if lo == -INF or hi == INF or hi - lo + 1 > limit:
            return None
        for v in range(lo, hi + 1):
            vals.add(v)
            if len(vals) > limit:
                return None
    return sorted(vals)
