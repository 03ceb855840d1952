import itertools
import re
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakbound.concrete import desugar_abs, eliminate_abs, eval_bool, eval_expr
from leakbound.exact import run_point_support
from leakbound.linear import (
    DNFExplosion,
    Linear,
    LinearConstraint,
    bool_to_dnf,
    disjoint_dnf,
    dnf_holds,
    linearize,
)
from leakbound.parser import (
    BadProbability,
    NonlinearProduct,
    QuerySyntaxError,
    UndeclaredVariable,
    parse,
    parse_bool,
    parse_expr,
    parse_stmt,
)
from leakbound.syntax import Abs, Assign, If, PIf, Seq, Skip, iter_exprs, show_program, show_stmt

APPENDIX_QUERY = """
secret s_x in [0, 9];
secret s_y in [0, 9];
output out;
d_l1 := |s_x - 4| + |s_y - 4|;
if d_l1 <= 4 { out := 1 } else { out := 0 }
"""


def count_abs(s):
    n = 0

    def walk(e):
        nonlocal n
        if isinstance(e, Abs):
            n += 1
            walk(e.arg)
        elif hasattr(e, "left"):
            walk(e.left)
            walk(e.right)

    for e in iter_exprs(s):
        walk(e)
    return n


class TestParse:
    def test_skip(self):
        assert parse_stmt("skip") == Skip()

    def test_query_file(self):
        p = parse(APPENDIX_QUERY)
        assert p.secrets == {"s_x": (0, 9), "s_y": (0, 9)}
        assert p.outputs == ("out",)
        assert isinstance(p.body, Seq)
        assert isinstance(p.body.first, Assign)
        assert isinstance(p.body.second, If)

    def test_nonlinear_product(self):
        with pytest.raises(NonlinearProduct):
            parse_stmt("x := y * z")

    def test_constant_product_ok(self):
        assert linearize(parse_expr("3 * x - 2")) == Linear.of({"x": 3}, -2)

    def test_undeclared(self):
        with pytest.raises(UndeclaredVariable):
            parse("secret x in [0, 3]; output r; r := y")

    @pytest.mark.parametrize("q", ["0/1", "1/1", "3/2"])
    def test_pif_probability_range(self, q):
        with pytest.raises(BadProbability):
            parse_stmt(f"pif {q} {{ x := 1 }} else {{ x := 2 }}")

    def test_pif(self):
        s = parse_stmt("pif 1/3 { x := 1 } else { x := 2 }")
        assert isinstance(s, PIf) and s.prob == Fraction(1, 3)

    def test_error_position(self):
        with pytest.raises(QuerySyntaxError) as err:
            parse_stmt("x := 1;\n y := ")
        assert err.value.line == 2

    def test_round_trip(self):
        p = parse(APPENDIX_QUERY)
        assert parse(show_program(p)) == p

    def test_relops(self):
        for op in ("<=", "<", "==", "!=", ">=", ">"):
            parse_bool(f"x {op} 3")


class TestDesugar:
    def test_appendix_query_has_two_temporaries(self):
        p = desugar_abs(parse(APPENDIX_QUERY))
        assert count_abs(p.body) == 0
        assert len(set(re.findall(r"_abs\d+", show_stmt(p.body)))) == 2

    def test_two_distances_give_four(self):
        s = parse_stmt("d1 := |x - 1| + |y - 2|; d2 := |x - 5| + |y - 2|; if d1 <= 2 || d2 <= 2 { r := 1 }")
        out = desugar_abs(s)
        assert len(set(re.findall(r"_abs\d+", show_stmt(out)))) == 4

    def test_no_abs_unchanged(self):
        s = parse_stmt("x := y + 1; if x > 2 { z := 1 }")
        assert desugar_abs(s) == s

    def test_fresh_names_avoid_declared(self):
        s = parse_stmt("_abs1 := |x|")
        out = show_stmt(desugar_abs(s))
        assert "_abs2" in out

    @settings(max_examples=60, deadline=None)
    @given(st.integers(-6, 6), st.integers(-6, 6))
    def test_desugar_preserves_semantics(self, x, y):
        s = parse_stmt("d := |x - 1| + |y + 2|; if |d - 3| <= 2 { r := 1 } else { r := 0 }")
        for t in (desugar_abs(s), eliminate_abs(s)):
            a = run_point_support(s, {"x": x, "y": y})[0]
            b = run_point_support(t, {"x": x, "y": y})[0]
            assert a["r"] == b["r"] and a["d"] == b["d"]

    def test_eliminate_introduces_no_names(self):
        s = parse_stmt("d := |x - 1| + |y|; if |x| + |y| <= 3 { r := 1 }")
        out = eliminate_abs(s)
        assert count_abs(out) == 0
        assert "_abs" not in show_stmt(out)


class TestEval:
    def test_examples(self):
        assert eval_expr({"x": 3}, parse_expr("x + 2")) == 5
        assert eval_expr({"x": 3, "y": 4}, parse_expr("x * 0")) == 0
        assert eval_expr({"s_x": 7, "l1_x": 4}, parse_expr("s_x - l1_x")) == 3
        assert eval_expr({"x": -5}, parse_expr("|x|")) == 5

    def test_bool(self):
        assert eval_bool({"x": 2}, parse_bool("x <= 4 && !(x == 3)"))
        assert not eval_bool({"x": 3}, parse_bool("x < 3 || x > 3"))

    def test_missing_variable(self):
        with pytest.raises(KeyError):
            eval_expr({}, parse_expr("x + 1"))

    def test_big_integers(self):
        assert eval_expr({"x": 10**30}, parse_expr("x * 3")) == 3 * 10**30


BOXES = list(itertools.product(range(-3, 4), range(-3, 4)))


class TestDNF:
    def test_strict_and_ne(self):
        dnf = bool_to_dnf(parse_bool("x != 2"))
        assert len(dnf) == 2
        for conj in dnf:
            assert all(c.op in ("<=", "==") for c in conj)

    def test_lt_is_le_minus_one(self):
        (conj,) = bool_to_dnf(parse_bool("x < 3"))
        assert conj == (LinearConstraint(Linear.of({"x": 1}), "<=", 2),)

    def test_explosion(self):
        b = " && ".join(f"(x{i} == 0 || x{i} == 1)" for i in range(12))
        with pytest.raises(DNFExplosion):
            bool_to_dnf(parse_bool(b), limit=1024)

    @pytest.mark.parametrize(
        "text",
        [
            "x <= 1 || y >= 0",
            "!(x == y) && x + y < 2",
            "!(x <= 0 || y <= 0) || x == -y",
            "|x| + |y| <= 2",
            "|x - y| > 1 && !(x != 0)",
        ],
    )
    def test_dnf_agrees_with_eval(self, text):
        b = parse_bool(text)
        dnf = bool_to_dnf(b)
        neg = bool_to_dnf(b, negate=True)
        dis = disjoint_dnf(b)
        for x, y in BOXES:
            env = {"x": x, "y": y}
            truth = eval_bool(env, b)
            assert dnf_holds(dnf, env) == truth
            assert dnf_holds(neg, env) == (not truth)
            assert sum(all(c.holds(env) for c in conj) for conj in dis) == int(truth)
