"""Exact distribution semantics; the ground-truth oracle for every bound we compute."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .concrete import compile_bool, compile_expr
from .syntax import Assign, If, PIf, Seq, Skip, Stmt, While, assigned_vars

StateKey = tuple[int, ...]

DEFAULT_FUEL = 10_000
DEFAULT_STATE_LIMIT = 1 << 20


class NonTermination(RuntimeError):
    pass


class EmptyPosterior(ValueError):
    pass


class StateExplosion(RuntimeError):
    pass


class Dist:
    """Sparse map from states (tuples aligned with ``vars``) to positive rationals."""

    __slots__ = ("vars", "probs")

    def __init__(self, vars: Iterable[str], probs: Mapping[StateKey, Fraction] | None = None):
        self.vars: tuple[str, ...] = tuple(vars)
        self.probs: dict[StateKey, Fraction] = {k: v for k, v in (probs or {}).items() if v}

    @classmethod
    def uniform(cls, ranges: Mapping[str, tuple[int, int]], per_point: Fraction | None = None) -> "Dist":
        names = tuple(ranges)
        axes = [range(lo, hi + 1) for lo, hi in ranges.values()]
        n = 1
        for ax in axes:
            n *= len(ax)
        p = Fraction(1, n) if per_point is None else Fraction(per_point)
        return cls(names, {k: p for k in itertools.product(*axes)})

    @classmethod
    def point(cls, state: Mapping[str, int]) -> "Dist":
        names = tuple(state)
        return cls(names, {tuple(state[x] for x in names): Fraction(1)})

    def __len__(self) -> int:
        return len(self.probs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        if set(self.vars) != set(other.vars):
            return False
        return self.as_dicts() == other.as_dicts()

    def __repr__(self) -> str:
        return f"Dist(vars={self.vars}, support={len(self.probs)}, mass={self.mass()})"

    def as_dicts(self) -> dict[frozenset, Fraction]:
        return {frozenset(zip(self.vars, k)): p for k, p in self.probs.items()}

    def states(self) -> Iterable[tuple[dict[str, int], Fraction]]:
        for k, p in self.probs.items():
            yield dict(zip(self.vars, k)), p

    def mass(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def support(self) -> list[dict[str, int]]:
        return [dict(zip(self.vars, k)) for k in self.probs]

    def max_prob(self) -> Fraction:
        return max(self.probs.values(), default=Fraction(0))

    def scale(self, q: Fraction) -> "Dist":
        return Dist(self.vars, {k: p * q for k, p in self.probs.items()})

    def aligned(self, names: tuple[str, ...]) -> "Dist":
        if names == self.vars:
            return self
        idx = [self.vars.index(x) for x in names]
        return Dist(names, {tuple(k[i] for i in idx): p for k, p in self.probs.items()})

    def __add__(self, other: "Dist") -> "Dist":
        if not other.probs:
            return self
        if not self.probs:
            return other
        other = other.aligned(self.vars)
        out = dict(self.probs)
        for k, p in other.probs.items():
            out[k] = out.get(k, 0) + p
        return Dist(self.vars, out)

    def filter(self, pred: Callable[[dict[str, int]], bool]) -> "Dist":
        names = self.vars
        return Dist(names, {k: p for k, p in self.probs.items() if pred(dict(zip(names, k)))})

    def condition(self, var: str, value: int) -> "Dist":
        i = self.vars.index(var)
        return Dist(self.vars, {k: p for k, p in self.probs.items() if k[i] == value})

    def project(self, keep: Iterable[str]) -> "Dist":
        names = tuple(x for x in self.vars if x in set(keep))
        idx = [self.vars.index(x) for x in names]
        out: dict[StateKey, Fraction] = {}
        for k, p in self.probs.items():
            kk = tuple(k[i] for i in idx)
            out[kk] = out.get(kk, 0) + p
        return Dist(names, out)

    def extend(self, defaults: Mapping[str, int]) -> "Dist":
        new = tuple(x for x in defaults if x not in self.vars)
        if not new:
            return self
        tail = tuple(defaults[x] for x in new)
        return Dist(self.vars + new, {k + tail: p for k, p in self.probs.items()})

    def assign(self, var: str, f: Callable[[dict[str, int]], int]) -> "Dist":
        names = self.vars if var in self.vars else self.vars + (var,)
        i = names.index(var)
        out: dict[StateKey, Fraction] = {}
        for k, p in self.probs.items():
            v = f(dict(zip(self.vars, k)))
            kk = k[:i] + (v,) + k[i + 1:] if i < len(k) else k + (v,)
            out[kk] = out.get(kk, 0) + p
        return Dist(names, out)


def _with_locals(s: Stmt, d: Dist) -> Dist:
    # locals start at 0 so that every branch shares one variable domain
    return d.extend({x: 0 for x in sorted(assigned_vars(s)) if x not in d.vars})


def run_dist(s: Stmt, d: Dist, fuel: int = DEFAULT_FUEL) -> Dist:
    """Push ``d`` through ``s`` per the distribution semantics."""
    return _run(s, _with_locals(s, d), fuel)


def _run(s: Stmt, d: Dist, fuel: int) -> Dist:
    if not d.probs or isinstance(s, Skip):
        return d
    if isinstance(s, Assign):
        return d.assign(s.var, compile_expr(s.expr))
    if isinstance(s, Seq):
        return _run(s.second, _run(s.first, d, fuel), fuel)
    if isinstance(s, If):
        g = compile_bool(s.cond)
        yes = d.filter(g)
        no = d.filter(lambda env: not g(env))
        return _run(s.then, yes, fuel) + _run(s.orelse, no, fuel)
    if isinstance(s, PIf):
        return _run(s.then, d.scale(s.prob), fuel) + _run(s.orelse, d.scale(1 - s.prob), fuel)
    if isinstance(s, While):
        g = compile_bool(s.cond)
        done = Dist(d.vars)
        live = d
        for _ in range(fuel):
            done = done + live.filter(lambda env: not g(env))
            live = _run(s.body, live.filter(g), fuel)
            if not live.probs:
                return done
        raise NonTermination(f"loop still carries mass {live.mass()} after {fuel} iterations")
    raise TypeError(f"unknown statement {s!r}")


def run_point_support(
    s: Stmt, state: Mapping[str, int], fuel: int = DEFAULT_FUEL, limit: int = DEFAULT_STATE_LIMIT
) -> list[dict[str, int]]:
    """All final states reachable from ``state`` (every pif branch explored)."""
    init = dict(state)
    for x in sorted(assigned_vars(s)):
        init.setdefault(x, 0)
    out: dict[tuple, dict[str, int]] = {}
    for env in _reach(s, [init], fuel, limit):
        out.setdefault(tuple(sorted(env.items())), env)
    return list(out.values())


def _dedupe(envs: list[dict[str, int]]) -> list[dict[str, int]]:
    if len(envs) < 2:
        return envs
    seen: dict[tuple, dict[str, int]] = {}
    for env in envs:
        seen.setdefault(tuple(sorted(env.items())), env)
    return list(seen.values())


def _reach(s: Stmt, envs: list[dict[str, int]], fuel: int, limit: int) -> list[dict[str, int]]:
    if not envs or isinstance(s, Skip):
        return envs
    if isinstance(s, Assign):
        f = compile_expr(s.expr)
        out = []
        for env in envs:
            env = dict(env)
            env[s.var] = f(env)
            out.append(env)
        return out
    if isinstance(s, Seq):
        return _reach(s.second, _reach(s.first, envs, fuel, limit), fuel, limit)
    if isinstance(s, If):
        g = compile_bool(s.cond)
        yes = [e for e in envs if g(e)]
        no = [e for e in envs if not g(e)]
        return _reach(s.then, yes, fuel, limit) + _reach(s.orelse, no, fuel, limit)
    if isinstance(s, PIf):
        out = _dedupe(_reach(s.then, envs, fuel, limit) + _reach(s.orelse, envs, fuel, limit))
        if len(out) > limit:
            raise StateExplosion(f"more than {limit} reachable states")
        return out
    if isinstance(s, While):
        g = compile_bool(s.cond)
        done: list[dict[str, int]] = []
        live = envs
        for _ in range(fuel):
            done.extend(e for e in live if not g(e))
            live = _dedupe(_reach(s.body, [e for e in live if g(e)], fuel, limit))
            if not live:
                return done
        raise NonTermination(f"loop still live after {fuel} iterations")
    raise TypeError(f"unknown statement {s!r}")


def can_output(s: Stmt, state: Mapping[str, int], r: str, o: int, fuel: int = DEFAULT_FUEL) -> bool:
    """Whether some run of ``s`` from ``state`` ends with ``r == o``."""
    return any(env[r] == o for env in run_point_support(s, state, fuel))


def posterior_exact(s: Stmt, prior: Dist, r: str, o: int, secrets: Iterable[str], fuel: int = DEFAULT_FUEL) -> Dist:
    """Unnormalised ``(run(s, prior) | r == o)`` projected onto ``secrets``."""
    post = run_dist(s, prior, fuel).condition(r, o).project(secrets)
    if not post.probs:
        raise EmptyPosterior(f"output {r} = {o} has probability zero")
    return post


def true_vulnerability(d: Dist) -> Fraction:
    m = d.mass()
    if m == 0:
        raise EmptyPosterior("vulnerability of a zero-mass distribution")
    return d.max_prob() / m


def output_values(s: Stmt, prior: Dist, r: str, fuel: int = DEFAULT_FUEL) -> list[int]:
    out = run_dist(s, prior, fuel)
    i = out.vars.index(r)
    return sorted({k[i] for k in out.probs})
