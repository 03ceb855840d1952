"""Concrete evaluation of expressions and the |E| desugaring pass."""

from __future__ import annotations

import itertools
from typing import Callable, Mapping

from .syntax import (
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
    Program,
    Rel,
    Seq,
    Skip,
    Stmt,
    Var,
    While,
    seq,
    stmt_vars,
)

State = Mapping[str, int]


class MissingVariable(KeyError):
    pass


def eval_expr(env: State, e: Expr) -> int:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise MissingVariable(e.name) from None
    if isinstance(e, BinOp):
        a, b = eval_expr(env, e.left), eval_expr(env, e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        return a * b
    return abs(eval_expr(env, e.arg))


_REL = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def eval_bool(env: State, b: BoolExpr) -> bool:
    if isinstance(b, Rel):
        return _REL[b.op](eval_expr(env, b.left), eval_expr(env, b.right))
    if isinstance(b, Not):
        return not eval_bool(env, b.arg)
    if isinstance(b, And):
        return eval_bool(env, b.left) and eval_bool(env, b.right)
    return eval_bool(env, b.left) or eval_bool(env, b.right)


# Closure compilation; used on hot paths (sampling, exact enumeration).

def compile_expr(e: Expr) -> Callable[[State], int]:
    if isinstance(e, Lit):
        v = e.value
        return lambda env: v
    if isinstance(e, Var):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, Abs):
        f = compile_expr(e.arg)
        return lambda env: abs(f(env))
    f, g = compile_expr(e.left), compile_expr(e.right)
    if isinstance(e.right, Lit):
        c = e.right.value
        if e.op == "+":
            return lambda env: f(env) + c
        if e.op == "-":
            return lambda env: f(env) - c
        return lambda env: f(env) * c
    if e.op == "+":
        return lambda env: f(env) + g(env)
    if e.op == "-":
        return lambda env: f(env) - g(env)
    return lambda env: f(env) * g(env)


def compile_bool(b: BoolExpr) -> Callable[[State], bool]:
    if isinstance(b, Rel):
        f, g, r = compile_expr(b.left), compile_expr(b.right), _REL[b.op]
        return lambda env: r(f(env), g(env))
    if isinstance(b, Not):
        h = compile_bool(b.arg)
        return lambda env: not h(env)
    p, q = compile_bool(b.left), compile_bool(b.right)
    if isinstance(b, And):
        return lambda env: p(env) and q(env)
    return lambda env: p(env) or q(env)


# ---------------------------------------------------------------------------
# |E| elimination


class _Fresh:
    def __init__(self, taken: frozenset[str], prefix: str = "abs"):
        self.taken = set(taken)
        self.prefix = prefix
        self.counter = itertools.count(1)

    def __call__(self) -> str:
        while True:
            name = f"_{self.prefix}{next(self.counter)}"
            if name not in self.taken:
                self.taken.add(name)
                return name


def _lift_expr(e: Expr, fresh: _Fresh, pre: list[Stmt]) -> Expr:
    if isinstance(e, (Var, Lit)):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, _lift_expr(e.left, fresh, pre), _lift_expr(e.right, fresh, pre))
    inner = _lift_expr(e.arg, fresh, pre)
    t = fresh()
    pre.append(If(Rel(">=", inner, Lit(0)), Assign(t, inner), Assign(t, BinOp("-", Lit(0), inner))))
    return Var(t)


def _lift_bool(b: BoolExpr, fresh: _Fresh, pre: list[Stmt]) -> BoolExpr:
    if isinstance(b, Rel):
        return Rel(b.op, _lift_expr(b.left, fresh, pre), _lift_expr(b.right, fresh, pre))
    if isinstance(b, Not):
        return Not(_lift_bool(b.arg, fresh, pre))
    return type(b)(_lift_bool(b.left, fresh, pre), _lift_bool(b.right, fresh, pre))


def _desugar(s: Stmt, fresh: _Fresh) -> Stmt:
    if isinstance(s, Skip):
        return s
    if isinstance(s, Assign):
        pre: list[Stmt] = []
        e = _lift_expr(s.expr, fresh, pre)
        return seq(*pre, Assign(s.var, e))
    if isinstance(s, Seq):
        return Seq(_desugar(s.first, fresh), _desugar(s.second, fresh))
    if isinstance(s, If):
        pre = []
        c = _lift_bool(s.cond, fresh, pre)
        return seq(*pre, If(c, _desugar(s.then, fresh), _desugar(s.orelse, fresh)))
    if isinstance(s, PIf):
        return PIf(s.prob, _desugar(s.then, fresh), _desugar(s.orelse, fresh))
    pre = []
    c = _lift_bool(s.cond, fresh, pre)
    body = _desugar(s.body, fresh)
    # the guard is re-evaluated at the end of every iteration
    return seq(*pre, While(c, seq(body, *pre)))


def desugar_abs(s: Stmt | Program, taken: frozenset[str] = frozenset()) -> Stmt | Program:
    """Replace each |E| by a fresh temporary computed with a conditional just before use."""
    if isinstance(s, Program):
        fresh = _Fresh(s.declared | stmt_vars(s.body))
        return Program(_desugar(s.body, fresh), s.secrets, s.inputs, s.outputs)
    return _desugar(s, _Fresh(taken | stmt_vars(s)))


# ---------------------------------------------------------------------------
# |E| elimination without temporaries (used by the abstract interpreter)

_SIGN_LIMIT = 6


def _sub(a: Expr, b: Expr) -> Expr:
    return BinOp("-", a, b)


def _all(bs: list[BoolExpr]) -> BoolExpr:
    out = bs[0]
    for b in bs[1:]:
        out = And(out, b)
    return out


def _any(bs: list[BoolExpr]) -> BoolExpr:
    out = bs[0]
    for b in bs[1:]:
        out = Or(out, b)
    return out


def _has_abs(e: Expr) -> bool:
    if isinstance(e, Abs):
        return True
    if isinstance(e, BinOp):
        return _has_abs(e.left) or _has_abs(e.right)
    return False


def _abs_cases(e: Expr) -> list[tuple[tuple[BoolExpr, ...], Expr]]:
    """Sign cases: ``e`` equals the abs-free expression wherever the conditions hold."""
    if isinstance(e, (Var, Lit)):
        return [((), e)]
    if isinstance(e, BinOp):
        return [
            (c1 + c2, BinOp(e.op, a, b))
            for c1, a in _abs_cases(e.left)
            for c2, b in _abs_cases(e.right)
        ]
    out = []
    for c, a in _abs_cases(e.arg):
        out.append((c + (Rel(">=", a, Lit(0)),), a))
        out.append((c + (Rel("<", a, Lit(0)),), _sub(Lit(0), a)))
    return out


def _abs_terms(e: Expr, k: int = 1):
    """Split ``k * e`` into an abs-free part and terms ``c * |a|``; None if nested."""
    if isinstance(e, (Var, Lit)):
        return [(k, e)], []
    if isinstance(e, Abs):
        if _has_abs(e.arg):
            return None
        return [], [(k, e.arg)]
    if e.op == "*":
        for const, other in ((e.left, e.right), (e.right, e.left)):
            if isinstance(const, Lit):
                return _abs_terms(other, k * const.value)
        return None
    left = _abs_terms(e.left, k)
    right = _abs_terms(e.right, k if e.op == "+" else -k)
    if left is None or right is None:
        return None
    return left[0] + right[0], left[1] + right[1]


def _scaled(k: int, e: Expr) -> Expr:
    return e if k == 1 else BinOp("*", Lit(k), e)


def _le0(e: Expr) -> BoolExpr:
    """``e <= 0`` with every |E| removed.

    A sum of |a_i| terms with coefficients of one sign is a max (or min) of
    linear forms over sign choices, giving a conjunction (or disjunction).
    Anything else is split by the signs of the abs arguments.
    """
    split = _abs_terms(e)
    if split is not None:
        lin, terms = split
        pos = all(c > 0 for c, _ in terms)
        neg = all(c < 0 for c, _ in terms)
        if terms and len(terms) <= _SIGN_LIMIT and (pos or neg):
            base: Expr = Lit(0)
            for k, x in lin:
                base = BinOp("+", base, _scaled(k, x))
            forms = []
            for signs in itertools.product((1, -1), repeat=len(terms)):
                f = base
                for s, (c, a) in zip(signs, terms):
                    f = BinOp("+", f, _scaled(s * c, a))
                forms.append(Rel("<=", f, Lit(0)))
            return _all(forms) if pos else _any(forms)
    return _any([_all([*conds, Rel("<=", x, Lit(0))]) for conds, x in _abs_cases(e)])


def _rel_abs_free(b: Rel) -> BoolExpr:
    l, r = b.left, b.right
    if b.op == "<=":
        return _le0(_sub(l, r))
    if b.op == "<":
        return _le0(BinOp("+", _sub(l, r), Lit(1)))
    if b.op == ">=":
        return _le0(_sub(r, l))
    if b.op == ">":
        return _le0(BinOp("+", _sub(r, l), Lit(1)))
    eq = And(_le0(_sub(l, r)), _le0(_sub(r, l)))
    return eq if b.op == "==" else Not(eq)


def eliminate_abs_bool(b: BoolExpr) -> BoolExpr:
    if isinstance(b, Rel):
        if _has_abs(b.left) or _has_abs(b.right):
            return _rel_abs_free(b)
        return b
    if isinstance(b, Not):
        return Not(eliminate_abs_bool(b.arg))
    return type(b)(eliminate_abs_bool(b.left), eliminate_abs_bool(b.right))


def eliminate_abs(s: Stmt) -> Stmt:
    """Equivalent program without |E| and without fresh temporaries.

    Guards are rewritten in place; an assignment becomes a chain of
    conditionals over the sign cases of its right-hand side.
    """
    if isinstance(s, Skip):
        return s
    if isinstance(s, Assign):
        if not _has_abs(s.expr):
            return s
        cases = _abs_cases(s.expr)
        out: Stmt = Assign(s.var, cases[-1][1])
        for conds, x in reversed(cases[:-1]):
            out = If(_all(list(conds)), Assign(s.var, x), out)
        return out
    if isinstance(s, Seq):
        return Seq(eliminate_abs(s.first), eliminate_abs(s.second))
    if isinstance(s, If):
        return If(eliminate_abs_bool(s.cond), eliminate_abs(s.then), eliminate_abs(s.orelse))
    if isinstance(s, PIf):
        return PIf(s.prob, eliminate_abs(s.then), eliminate_abs(s.orelse))
    return While(eliminate_abs_bool(s.cond), eliminate_abs(s.body))
