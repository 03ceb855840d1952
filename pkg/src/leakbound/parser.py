"""Recursive-descent parser for query files.

Grammar (whitespace and ``//`` or ``#`` comments ignored)::

    file   := decl* block
    decl   := "secret" ID "in" "[" INT "," INT "]" ";"
            | "input" ID "=" INT ";"
            | "output" ID ";"
    block  := stmt (";" stmt)* [";"]
    stmt   := "skip" | ID ":=" expr
            | "if" bexp "{" block "}" ["else" "{" block "}"]
            | "pif" INT "/" INT "{" block "}" "else" "{" block "}"
            | "while" bexp "{" block "}"
    bexp   := bterm ("||" bterm)*
    bterm  := bfact ("&&" bfact)*
    bfact  := "!" bfact | "(" bexp ")" | "true" | "false" | expr RELOP expr
    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := "-" unary | atom
    atom   := INT | ID | "true" | "false" | "(" expr ")" | "|" expr "|"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .syntax import (
    FALSE,
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
    Program,
    Rel,
    Skip,
    Stmt,
    Var,
    While,
    assigned_vars,
    expr_vars,
    seq,
    stmt_vars,
)


class QuerySyntaxError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class UndeclaredVariable(QuerySyntaxError):
    pass


class NonlinearProduct(QuerySyntaxError):
    pass


class BadProbability(QuerySyntaxError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|\#[^\n]*)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z_0-9.]*)
  | (?P<op>:=|<=|>=|==|!=|\|\||&&|[<>=!+\-*/|(){}\[\];,])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"skip", "if", "else", "pif", "while", "secret", "input", "output", "in", "true", "false"}
_REL_ALIASES = {"=": "=="}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "id" and chunk in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.constants: set[str] = set()

    # -- token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None, cls=QuerySyntaxError):
        t = tok or self.tok
        return cls(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def take(self, text: str) -> _Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def take_kind(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            raise self.error(f"expected {kind}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.take("-")
            sign = -1
        return sign * int(self.take_kind("int").text)

    # -- file level
    def program(self) -> Program:
        secrets: dict[str, tuple[int, int]] = {}
        inputs: dict[str, int] = {}
        outputs: list[str] = []
        while self.tok.text in ("secret", "input", "output") and self.tok.kind == "kw":
            kw = self.take(self.tok.text).text
            name_tok = self.take_kind("id")
            name = name_tok.text
            if name in secrets or name in inputs or name in outputs:
                raise self.error(f"duplicate declaration of {name!r}", name_tok)
            if kw == "secret":
                self.take("in")
                self.take("[")
                lo = self.integer()
                self.take(",")
                hi = self.integer()
                self.take("]")
                if lo > hi:
                    raise self.error(f"empty range for {name!r}", name_tok)
                secrets[name] = (lo, hi)
            elif kw == "input":
                self.take("=")
                inputs[name] = self.integer()
                self.constants.add(name)
            else:
                outputs.append(name)
            self.take(";")
        body = self.block(top=True)
        self.take_kind("eof")
        return Program(body, secrets, inputs, tuple(outputs))

    def block(self, top: bool = False) -> Stmt:
        stmts = []
        end = "eof" if top else "}"
        while True:
            if (top and self.tok.kind == "eof") or (not top and self.at("}")):
                break
            stmts.append(self.stmt())
            if self.at(";"):
                self.take(";")
            elif not ((top and self.tok.kind == "eof") or self.at(end)):
                raise self.error(f"expected ';', found {self.tok.text!r}")
        return seq(*stmts) if stmts else Skip()

    def braced(self) -> Stmt:
        self.take("{")
        body = self.block()
        self.take("}")
        return body

    def stmt(self) -> Stmt:
        t = self.tok
        if self.at("skip"):
            self.take("skip")
            return Skip()
        if self.at("if"):
            self.take("if")
            cond = self.bexp()
            then = self.braced()
            orelse: Stmt = Skip()
            if self.at("else"):
                self.take("else")
                orelse = self.stmt() if self.at("if") else self.braced()
            return If(cond, then, orelse)
        if self.at("pif"):
            self.take("pif")
            num = self.integer()
            self.take("/")
            den_tok = self.tok
            den = self.integer()
            if den == 0:
                raise self.error("zero denominator", den_tok, BadProbability)
            q = Fraction(num, den)
            if not 0 < q < 1:
                raise self.error(f"pif probability {q} outside (0, 1)", t, BadProbability)
            then = self.braced()
            self.take("else")
            return PIf(q, then, self.braced())
        if self.at("while"):
            self.take("while")
            cond = self.bexp()
            return While(cond, self.braced())
        if t.kind == "id":
            self.i += 1
            if t.text in self.constants:
                raise self.error(f"cannot assign to input {t.text!r}", t)
            self.take(":=")
            return Assign(t.text, self.expr())
        raise self.error(f"expected a statement, found {t.text or 'end of input'!r}")

    # -- boolean expressions
    def bexp(self) -> BoolExpr:
        b = self.bterm()
        while self.at("||"):
            self.take("||")
            b = Or(b, self.bterm())
        return b

    def bterm(self) -> BoolExpr:
        b = self.bfact()
        while self.at("&&"):
            self.take("&&")
            b = And(b, self.bfact())
        return b

    def bfact(self) -> BoolExpr:
        if self.at("!"):
            self.take("!")
            return Not(self.bfact())
        if self.at("true") or self.at("false"):
            # boolean literal unless it is the left side of a comparison
            nxt = self.toks[self.i + 1]
            if not (nxt.kind == "op" and (nxt.text in _REL_OPS)):
                return TRUE if self.take(self.tok.text).text == "true" else FALSE
        if self.at("("):
            # either a parenthesised boolean or the start of an arithmetic operand
            save = self.i
            self.take("(")
            try:
                b = self.bexp()
                self.take(")")
                if not (self.tok.kind == "op" and self.tok.text in _REL_OPS | {"+", "-", "*"}):
                    return b
            except QuerySyntaxError:
                pass
            self.i = save
        left = self.expr()
        op_tok = self.tok
        if not (op_tok.kind == "op" and op_tok.text in _REL_OPS):
            raise self.error(f"expected a comparison operator, found {op_tok.text!r}")
        self.i += 1
        return Rel(_REL_ALIASES.get(op_tok.text, op_tok.text), left, self.expr())

    # -- arithmetic expressions
    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.take(self.tok.text).text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*"):
            t = self.take("*")
            rhs = self.unary()
            if self._nonconst(e) and self._nonconst(rhs):
                raise self.error("product of two variable expressions is not linear", t, NonlinearProduct)
            e = BinOp("*", e, rhs)
        return e

    def _nonconst(self, e: Expr) -> bool:
        return bool(expr_vars(e) - self.constants)

    def unary(self) -> Expr:
        if self.at("-"):
            self.take("-")
            if self.tok.kind == "int":
                return Lit(-int(self.take_kind("int").text))
            return BinOp("-", Lit(0), self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Lit(int(t.text))
        if self.at("true") or self.at("false"):
            self.i += 1
            return Lit(1 if t.text == "true" else 0)
        if t.kind == "id":
            self.i += 1
            return Var(t.text)
        if self.at("("):
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        if self.at("|"):
            self.take("|")
            e = self.expr()
            self.take("|")
            return Abs(e)
        raise self.error(f"expected an expression, found {t.text or 'end of input'!r}")


_REL_OPS = {"<=", "<", "==", "=", "!=", ">=", ">"}


def parse(text: str) -> Program:
    """Parse a query file; raises ``QuerySyntaxError`` (or a subclass) on failure."""
    p = _Parser(text)
    prog = p.program()
    _check_declared(prog)
    return prog


def parse_stmt(text: str, constants: frozenset[str] = frozenset()) -> Stmt:
    """Parse a bare statement block with no declarations and no scope check."""
    p = _Parser(text)
    p.constants = set(constants)
    body = p.block(top=True)
    p.take_kind("eof")
    return body


def parse_bool(text: str) -> BoolExpr:
    p = _Parser(text)
    b = p.bexp()
    p.take_kind("eof")
    return b


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    p.take_kind("eof")
    return e


def _check_declared(prog: Program) -> None:
    known = prog.declared | assigned_vars(prog.body)
    used = stmt_vars(prog.body)
    missing = sorted(used - known)
    if missing:
        raise UndeclaredVariable(f"undeclared variable {missing[0]!r}")
