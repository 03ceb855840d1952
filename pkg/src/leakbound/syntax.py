"""Abstract syntax of the query language and its pretty printer."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union


# ---------------------------------------------------------------------------
# Arithmetic expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class BinOp:
    op: str  # one of "+", "-", "*"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Abs:
    """|arg|; surface sugar, removed by ``desugar_abs`` before abstract analysis."""

    arg: "Expr"


Expr = Union[Var, Lit, BinOp, Abs]


# ---------------------------------------------------------------------------
# Boolean expressions

RELOPS = ("<=", "<", "==", "!=", ">=", ">")


@dataclass(frozen=True)
class Rel:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Or:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Not:
    arg: "BoolExpr"


BoolExpr = Union[Rel, And, Or, Not]

TRUE = Rel("==", Lit(0), Lit(0))
FALSE = Rel("!=", Lit(0), Lit(0))


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


@dataclass(frozen=True)
class If:
    cond: BoolExpr
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class PIf:
    prob: Fraction
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class While:
    cond: BoolExpr
    body: "Stmt"


Stmt = Union[Skip, Assign, Seq, If, PIf, While]


@dataclass(frozen=True)
class Program:
    body: Stmt
    secrets: dict[str, tuple[int, int]]
    inputs: dict[str, int]
    outputs: tuple[str, ...]

    @property
    def declared(self) -> frozenset[str]:
        return frozenset(self.secrets) | frozenset(self.inputs) | frozenset(self.outputs)

    def bind_inputs(self) -> Stmt:
        """Body with every input replaced by its literal value."""
        return subst_stmt(self.body, {k: Lit(v) for k, v in self.inputs.items()})


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence; skips are dropped."""
    parts = [s for s in stmts if not isinstance(s, Skip)]
    if not parts:
        return Skip()
    out = parts[-1]
    for s in reversed(parts[:-1]):
        out = Seq(s, out)
    return out


def flatten_seq(s: Stmt) -> list[Stmt]:
    if isinstance(s, Seq):
        return flatten_seq(s.first) + flatten_seq(s.second)
    return [s]


# ---------------------------------------------------------------------------
# Traversals


def expr_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    return expr_vars(e.arg)


def bool_vars(b: BoolExpr) -> frozenset[str]:
    if isinstance(b, Rel):
        return expr_vars(b.left) | expr_vars(b.right)
    if isinstance(b, Not):
        return bool_vars(b.arg)
    return bool_vars(b.left) | bool_vars(b.right)


def stmt_vars(s: Stmt) -> frozenset[str]:
    """Every variable read or written by ``s``."""
    if isinstance(s, Skip):
        return frozenset()
    if isinstance(s, Assign):
        return frozenset([s.var]) | expr_vars(s.expr)
    if isinstance(s, Seq):
        return stmt_vars(s.first) | stmt_vars(s.second)
    if isinstance(s, If):
        return bool_vars(s.cond) | stmt_vars(s.then) | stmt_vars(s.orelse)
    if isinstance(s, PIf):
        return stmt_vars(s.then) | stmt_vars(s.orelse)
    return bool_vars(s.cond) | stmt_vars(s.body)


def assigned_vars(s: Stmt) -> frozenset[str]:
    if isinstance(s, Assign):
        return frozenset([s.var])
    if isinstance(s, Seq):
        return assigned_vars(s.first) | assigned_vars(s.second)
    if isinstance(s, (If, PIf)):
        return assigned_vars(s.then) | assigned_vars(s.orelse)
    if isinstance(s, While):
        return assigned_vars(s.body)
    return frozenset()


def has_abs(e: Expr) -> bool:
    if isinstance(e, Abs):
        return True
    if isinstance(e, BinOp):
        return has_abs(e.left) or has_abs(e.right)
    return False


def iter_exprs(s: Stmt) -> Iterator[Expr]:
    if isinstance(s, Assign):
        yield s.expr
    elif isinstance(s, Seq):
        yield from iter_exprs(s.first)
        yield from iter_exprs(s.second)
    elif isinstance(s, If):
        yield from _bool_exprs(s.cond)
        yield from iter_exprs(s.then)
        yield from iter_exprs(s.orelse)
    elif isinstance(s, PIf):
        yield from iter_exprs(s.then)
        yield from iter_exprs(s.orelse)
    elif isinstance(s, While):
        yield from _bool_exprs(s.cond)
        yield from iter_exprs(s.body)


def _bool_exprs(b: BoolExpr) -> Iterator[Expr]:
    if isinstance(b, Rel):
        yield b.left
        yield b.right
    elif isinstance(b, Not):
        yield from _bool_exprs(b.arg)
    else:
        yield from _bool_exprs(b.left)
        yield from _bool_exprs(b.right)


def subst_expr(e: Expr, env: dict[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return env.get(e.name, e)
    if isinstance(e, Lit):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_expr(e.left, env), subst_expr(e.right, env))
    return Abs(subst_expr(e.arg, env))


def subst_bool(b: BoolExpr, env: dict[str, Expr]) -> BoolExpr:
    if isinstance(b, Rel):
        return Rel(b.op, subst_expr(b.left, env), subst_expr(b.right, env))
    if isinstance(b, Not):
        return Not(subst_bool(b.arg, env))
    return type(b)(subst_bool(b.left, env), subst_bool(b.right, env))


def subst_stmt(s: Stmt, env: dict[str, Expr]) -> Stmt:
    if isinstance(s, Skip):
        return s
    if isinstance(s, Assign):
        return Assign(s.var, subst_expr(s.expr, env))
    if isinstance(s, Seq):
        return Seq(subst_stmt(s.first, env), subst_stmt(s.second, env))
    if isinstance(s, If):
        return If(subst_bool(s.cond, env), subst_stmt(s.then, env), subst_stmt(s.orelse, env))
    if isinstance(s, PIf):
        return PIf(s.prob, subst_stmt(s.then, env), subst_stmt(s.orelse, env))
    return While(subst_bool(s.cond, env), subst_stmt(s.body, env))


def rename_stmt(s: Stmt, names: dict[str, str]) -> Stmt:
    """Rename variables everywhere, assignment targets included."""
    env = {a: Var(b) for a, b in names.items()}
    if isinstance(s, Skip):
        return s
    if isinstance(s, Assign):
        return Assign(names.get(s.var, s.var), subst_expr(s.expr, env))
    if isinstance(s, Seq):
        return Seq(rename_stmt(s.first, names), rename_stmt(s.second, names))
    if isinstance(s, If):
        return If(subst_bool(s.cond, env), rename_stmt(s.then, names), rename_stmt(s.orelse, names))
    if isinstance(s, PIf):
        return PIf(s.prob, rename_stmt(s.then, names), rename_stmt(s.orelse, names))
    return While(subst_bool(s.cond, env), rename_stmt(s.body, names))


# ---------------------------------------------------------------------------
# Pretty printing (inverse of the parser)

_PREC = {"+": 1, "-": 1, "*": 2}


def show_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Lit):
        return str(e.value) if e.value >= 0 else f"({e.value})"
    if isinstance(e, Abs):
        return f"|{show_expr(e.arg)}|"
    p = _PREC[e.op]
    # left-associative: the right operand needs parens at equal precedence
    text = f"{show_expr(e.left, p)} {e.op} {show_expr(e.right, p + 1)}"
    return f"({text})" if p < prec else text


def show_bool(b: BoolExpr, prec: int = 0) -> str:
    if isinstance(b, Rel):
        return f"{show_expr(b.left)} {b.op} {show_expr(b.right)}"
    if isinstance(b, Not):
        return f"!({show_bool(b.arg)})"
    if isinstance(b, Or):
        text = f"{show_bool(b.left, 1)} || {show_bool(b.right, 2)}"
        return f"({text})" if prec > 1 else text
    text = f"{show_bool(b.left, 2)} && {show_bool(b.right, 3)}"
    return f"({text})" if prec > 2 else text


def show_stmt(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(s, Seq):
        return ";\n".join(show_stmt(part, indent) for part in flatten_seq(s))
    if isinstance(s, Skip):
        return pad + "skip"
    if isinstance(s, Assign):
        return f"{pad}{s.var} := {show_expr(s.expr)}"
    if isinstance(s, If):
        return (
            f"{pad}if ({show_bool(s.cond)}) {{\n{show_stmt(s.then, indent + 1)}\n"
            f"{pad}}} else {{\n{show_stmt(s.orelse, indent + 1)}\n{pad}}}"
        )
    if isinstance(s, PIf):
        q = Fraction(s.prob)
        return (
            f"{pad}pif {q.numerator}/{q.denominator} {{\n{show_stmt(s.then, indent + 1)}\n"
            f"{pad}}} else {{\n{show_stmt(s.orelse, indent + 1)}\n{pad}}}"
        )
    return f"{pad}while ({show_bool(s.cond)}) {{\n{show_stmt(s.body, indent + 1)}\n{pad}}}"


def show_program(p: Program) -> str:
    lines = [f"secret {x} in [{lo}, {hi}];" for x, (lo, hi) in p.secrets.items()]
    lines += [f"input {x} = {v};" for x, v in p.inputs.items()]
    lines += [f"output {x};" for x in p.outputs]
    lines.append(show_stmt(p.body))
    return "\n".join(lines) + "\n"
