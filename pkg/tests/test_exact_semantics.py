import itertools
from fractions import Fraction

import pytest

from conftest import CENT, GRID, ONE_DIAMOND, TWO_DIAMONDS, WIDE_GRID, random_program
from leakbound.concrete import eval_bool, eval_expr
from leakbound.exact import (
    Dist,
    EmptyPosterior,
    NonTermination,
    StateExplosion,
    posterior_exact,
    run_dist,
    run_point_support,
    true_vulnerability,
)
from leakbound.parser import parse_stmt
from leakbound.syntax import Assign, If, PIf, Seq, Skip, assigned_vars


def paths(s, env, p=Fraction(1)):
    """Path-by-path oracle for loop-free programs: yields (probability, final state)."""
    if isinstance(s, Skip):
        yield p, env
    elif isinstance(s, Assign):
        yield p, {**env, s.var: eval_expr(env, s.expr)}
    elif isinstance(s, Seq):
        for q, mid in paths(s.first, env, p):
            yield from paths(s.second, mid, q)
    elif isinstance(s, If):
        yield from paths(s.then if eval_bool(env, s.cond) else s.orelse, env, p)
    elif isinstance(s, PIf):
        yield from paths(s.then, env, p * s.prob)
        yield from paths(s.orelse, env, p * (1 - s.prob))
    else:
        raise TypeError(s)


def oracle_posterior(s, ranges, r, o):
    names = sorted(ranges)
    locals_ = sorted(assigned_vars(s) - set(names))
    n = 1
    for lo, hi in ranges.values():
        n *= hi - lo + 1
    out = {}
    for point in itertools.product(*(range(ranges[x][0], ranges[x][1] + 1) for x in names)):
        env = dict(zip(names, point), **{x: 0 for x in locals_})
        for q, fin in paths(s, env, Fraction(1, n)):
            if fin[r] == o:
                out[point] = out.get(point, 0) + q
    return Dist(names, out)


def test_skip_identity():
    d = Dist.uniform({"x": (0, 3)})
    assert run_dist(Skip(), d) == d


def test_pif_recombines():
    d = Dist.uniform({"x": (0, 3)})
    assert run_dist(parse_stmt("pif 1/3 { skip } else { skip }"), d) == d


def test_if_four_states():
    d = Dist.uniform({"x": (0, 3)})
    out = run_dist(parse_stmt("if x <= 1 { y := 0 } else { y := 1 }"), d)
    assert out.project(["y"]).as_dicts() == {
        frozenset({("y", 0)}): Fraction(1, 2),
        frozenset({("y", 1)}): Fraction(1, 2),
    }


def test_point_support():
    s = parse_stmt("x := x + 1")
    assert run_point_support(s, {"x": 3}) == [{"x": 4}]
    s = parse_stmt("pif 1/2 { r := 0 } else { r := 1 }")
    assert sorted(e["r"] for e in run_point_support(s, {"x": 0})) == [0, 1]


def test_point_support_diamond():
    s = parse_stmt(ONE_DIAMOND)
    (fin,) = run_point_support(s, {"s_x": 5, "s_y": 4})
    assert fin["out"] == 1


def test_single_diamond_posterior():
    post = posterior_exact(parse_stmt(ONE_DIAMOND), Dist.uniform(GRID), "out", 1, ["s_x", "s_y"])
    assert len(post) == 41
    assert set(post.probs.values()) == {CENT}
    assert post.mass() == Fraction(41, 100)
    assert true_vulnerability(post) == Fraction(1, 41)


def test_two_diamond_posterior():
    prior = Dist.uniform(WIDE_GRID, CENT)
    post = posterior_exact(parse_stmt(TWO_DIAMONDS), prior, "out", 1, ["s_x", "s_y"])
    assert len(post) == 77
    assert post.mass() == Fraction(77, 100)
    assert true_vulnerability(post) == Fraction(1, 77)


def test_empty_posterior():
    with pytest.raises(EmptyPosterior):
        posterior_exact(parse_stmt("r := 1"), Dist.uniform({"x": (0, 3)}), "r", 0, ["x"])


def test_uniform_vulnerability():
    assert true_vulnerability(Dist.uniform({"x": (0, 6)})) == Fraction(1, 7)


def test_fuel():
    with pytest.raises(NonTermination):
        run_dist(parse_stmt("while x >= 0 { x := x + 1 }"), Dist.uniform({"x": (0, 1)}), fuel=50)


def test_terminating_loop():
    out = run_dist(parse_stmt("while x < 5 { x := x + 1 }"), Dist.uniform({"x": (0, 3)}))
    assert out.as_dicts() == {frozenset({("x", 5)}): Fraction(1)}


def test_branch_explosion_guard():
    body = "; ".join(f"pif 1/2 {{ v{i} := 1 }} else {{ v{i} := 0 }}" for i in range(12))
    with pytest.raises(StateExplosion):
        run_point_support(parse_stmt(body), {}, limit=1 << 10)


@pytest.mark.parametrize("seed", range(40))
def test_random_programs_match_path_oracle(seed):
    s, ranges = random_program(seed)
    prior = Dist.uniform(ranges)
    out = run_dist(s, prior)
    assert out.mass() == 1
    for o in sorted({st["r"] for st, _ in out.states()}):
        assert posterior_exact(s, prior, "r", o, sorted(ranges)) == oracle_posterior(s, ranges, "r", o)


@pytest.mark.parametrize("seed", range(10))
def test_linearity(seed):
    s, ranges = random_program(seed)
    names = sorted(ranges)
    pts = list(itertools.product(*(range(ranges[x][0], ranges[x][1] + 1) for x in names)))
    d1 = Dist(names, {k: Fraction(1, len(pts)) for k in pts[::2]})
    d2 = Dist(names, {k: Fraction(1, len(pts)) for k in pts[1::2]})
    a, b = Fraction(2, 3), Fraction(1, 5)
    lhs = run_dist(s, d1.scale(a) + d2.scale(b))
    rhs = run_dist(s, d1).scale(a) + run_dist(s, d2).scale(b)
    assert lhs == rhs


def test_pif_law():
    d = Dist.uniform({"x": (0, 4)})
    out = run_dist(parse_stmt("pif 2/7 { r := 1 } else { r := 0 }"), d)
    assert out.condition("r", 1).mass() == Fraction(2, 7)


def test_projection_preserves_mass():
    d = run_dist(parse_stmt("y := x + 1"), Dist.uniform({"x": (0, 4)}))
    assert d.project(["y"]).mass() == d.mass()
