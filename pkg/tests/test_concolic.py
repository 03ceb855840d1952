import itertools
import random
from fractions import Fraction

import pytest

from conftest import CENT, GRID, ONE_DIAMOND, TWO_DIAMONDS, WIDE_GRID, joined_two_diamond_element, random_program
from leakbound.concolic import combined_refine, concolic_refine, concolic_run, pc_to_regions
from leakbound.concrete import eval_bool
from leakbound.exact import Dist, posterior_exact, run_dist
from leakbound.interp import abstract_posterior
from leakbound.parser import parse_bool, parse_stmt
from leakbound.policy import vulnerability_bound
from leakbound.probpoly import Powerset, ProbPoly, gamma_contains
from leakbound.region import Region, count_union
from leakbound.sampling import SampleParams, output_classifier, sample_refine

SECRETS = ["s_x", "s_y"]


def grid_points(ranges):
    names = sorted(ranges)
    for vals in itertools.product(*(range(lo, hi + 1) for lo, hi in (ranges[x] for x in names))):
        yield dict(zip(names, vals))


class TestRun:
    def test_straight_line(self):
        res = concolic_run(parse_stmt("x := s + 1; r := x"), {"s": 3})
        assert res.prob == 1 and res.pc == () and res.final["r"] == 4

    def test_pif(self):
        s = parse_stmt("pif 1/3 { r := 0 } else { r := 1 }")
        seen = set()
        for seed in range(20):
            res = concolic_run(s, {"x": 0}, rng=random.Random(seed))
            assert res.pc == ()
            seen.add((res.final["r"], res.prob))
        assert seen == {(0, Fraction(1, 3)), (1, Fraction(2, 3))}

    def test_inputs_are_literals(self):
        res = concolic_run(parse_stmt("if s >= ask { r := 1 }"), {"s": 5}, {"ask": 3})
        (b,) = res.pc
        assert "ask" not in str(b)

    def test_left_diamond_path(self):
        s = parse_stmt(TWO_DIAMONDS)
        res = concolic_run(s, {"s_x": 3, "s_y": 4})
        assert res.final["out"] == 1
        cond = res.condition()
        # every grid point on the path reaches the same output
        for env in grid_points(WIDE_GRID):
            if eval_bool(env, cond):
                (fin,) = [concolic_run(s, env).final]
                assert fin["out"] == 1

    @pytest.mark.parametrize("seed", range(30))
    def test_path_faithfulness(self, seed):
        s, ranges = random_program(seed)
        rng = random.Random(seed)
        pts = list(grid_points(ranges))
        for start in rng.sample(pts, min(5, len(pts))):
            coin = rng.getrandbits(32)
            res = concolic_run(s, start, rng=random.Random(coin))
            cond = res.condition()
            for env in pts:
                if eval_bool(env, cond):
                    again = concolic_run(s, env, rng=random.Random(coin))
                    assert again.final["r"] == res.final["r"]


class TestRegions:
    def test_true(self):
        g = Region.from_box(GRID)
        assert pc_to_regions((), [g]) == [g]

    def test_left_diamond_count(self):
        res = concolic_run(parse_stmt(ONE_DIAMOND), {"s_x": 4, "s_y": 4})
        assert count_union(pc_to_regions(res, [Region.from_box(GRID)])).lo == 41

    def test_integer_complement(self):
        (g,) = pc_to_regions(parse_bool("!(x <= 4)"), [Region.from_box({"x": (0, 9)})])
        assert g.box["x"] == (5, 9)

    @pytest.mark.parametrize("seed", range(20))
    def test_under_approximation(self, seed):
        s, ranges = random_program(seed)
        prior = Dist.uniform(ranges)
        rng = random.Random(seed)
        start = {x: rng.randint(lo, hi) for x, (lo, hi) in ranges.items()}
        res = concolic_run(s, start, rng=rng)
        post = posterior_exact(s, prior, "r", res.final["r"], sorted(ranges))
        n = count_union(pc_to_regions(res, [Region.from_box(ranges)])).lo
        assert 1 <= n <= len(post)


class TestRefine:
    def test_no_op_when_already_tight(self):
        P = abstract_posterior(parse_stmt(ONE_DIAMOND), Powerset.uniform(GRID, CENT, 4), "out", 1, SECRETS)
        Q, rep, _ = concolic_refine(P, parse_stmt(ONE_DIAMOND), "out", 1)
        assert rep.succeeded and Q.elements == P.elements

    def test_weakened_prior(self):
        s = parse_stmt(ONE_DIAMOND)
        e = ProbPoly.make(Region.from_box({"s_x": (0, 8), "s_y": (0, 8)}), 10, 81, CENT, CENT, Fraction(1, 10), Fraction(81, 100))
        P = Powerset.of([e], SECRETS, 1)
        Q, rep, _ = concolic_refine(P, s, "out", 1, seed=3)
        (f,) = Q.elements
        assert f.s_min == 41 and f.m_min == Fraction(41, 100)
        truth = posterior_exact(s, Dist.uniform(GRID), "out", 1, SECRETS)
        assert gamma_contains(Q, truth) is True

    def test_total_support(self):
        P = Powerset.of([ProbPoly.make(Region.from_box({"x": (0, 9)}), 0, 10, CENT, CENT, 0, 1)], ["x"], 1)
        (f,) = concolic_refine(P, parse_stmt("r := 0"), "r", 0)[0].elements
        assert f.s_min == 10

    def test_gives_up(self):
        P = Powerset.of([ProbPoly.make(Region.from_box({"x": (0, 9)}), 0, 10, CENT, CENT, 0, 1)], ["x"], 1)
        Q, rep, _ = concolic_refine(P, parse_stmt("r := 0"), "r", 5, retries=20)
        assert not rep.succeeded and Q.elements == P.elements

    def test_two_diamond_single_run(self):
        P = joined_two_diamond_element()
        for seed in range(20):
            Q, rep, _ = concolic_refine(P, parse_stmt(TWO_DIAMONDS), "out", 1, seed=seed)
            (f,) = Q.elements
            # one path covers a single sign case of one diamond
            assert 1 <= rep.covered[0] <= 41
            assert f.s_min == max(55, rep.covered[0])

    def test_multi_run_covers_more(self):
        P = joined_two_diamond_element()
        s = parse_stmt(TWO_DIAMONDS)
        (one,) = concolic_refine(P, s, "out", 1, seed=1)[0].elements
        (many,) = concolic_refine(P, s, "out", 1, seed=1, retries=400, multi=True)[0].elements
        assert many.s_min >= one.s_min
        assert many.s_min == 77

    def test_skips_query_writing_secret(self):
        # the path condition speaks of x before the assignment, the posterior after it
        P = Powerset.of([ProbPoly.make(Region.from_box({"x": (0, 9)}), 0, 10, CENT, CENT, 0, 1)], ["x"], 1)
        s = parse_stmt("x := x + 20; r := 0")
        Q, rep, _ = concolic_refine(P, s, "r", 0)
        assert Q.elements == P.elements and not rep.runs
        C, _ = combined_refine(P, s, "r", 0, output_classifier(s, "r", 0), SampleParams(100))
        assert C.elements == P.elements

    def test_deterministic(self):
        P = joined_two_diamond_element()
        s = parse_stmt(TWO_DIAMONDS)
        a = concolic_refine(P, s, "out", 1, seed=9)[0]
        b = concolic_refine(P, s, "out", 1, seed=9)[0]
        assert a.elements == b.elements

    @pytest.mark.parametrize("seed", range(30))
    def test_soundness_random_programs(self, seed):
        s, ranges = random_program(seed)
        prior = Dist.uniform(ranges)
        secrets = sorted(ranges)
        P0 = Powerset.uniform(ranges, None, 2)
        for o in sorted({st["r"] for st, _ in run_dist(s, prior).states()}):
            truth = posterior_exact(s, prior, "r", o, secrets)
            P = abstract_posterior(s, P0, "r", o, secrets)
            Q = concolic_refine(P, s, "r", o, seed=seed, multi=True)[0]
            assert gamma_contains(Q, truth) is not False


class TestCombined:
    def test_joined_element(self):
        P = joined_two_diamond_element()
        s = parse_stmt(TWO_DIAMONDS)
        Q, rep = combined_refine(P, s, "out", 1, output_classifier(s, "out", 1), SampleParams(1000, 0.9, 0))
        (f,) = Q.elements
        assert f.s_min <= 77 <= f.s_max
        assert f.s_min >= rep.concolic.covered[0]
        assert vulnerability_bound(Q) < Fraction(2, 55)

    def test_failed_concolic_matches_sampling(self):
        P = Powerset.of([ProbPoly.make(Region.from_box({"x": (0, 29)}), 0, 30, Fraction(1, 30), Fraction(1, 30), 0, 1)], ["x"], 1)
        s = parse_stmt("r := 0; if x <= 10 { r := 1 }")
        clf = output_classifier(s, "r", 1)
        params = SampleParams(200, 0.9, 4)
        a, _ = combined_refine(P, s, "r", 1, clf, params, retries=0)
        b, _ = sample_refine(P, clf, params)
        assert a.elements == b.elements

    def test_full_cover(self):
        P = Powerset.of([ProbPoly.make(Region.from_box({"x": (0, 9)}), 0, 10, CENT, CENT, 0, 1)], ["x"], 1)
        s = parse_stmt("r := 0")
        (f,) = combined_refine(P, s, "r", 0, output_classifier(s, "r", 0), SampleParams(100))[0].elements
        assert f.s_min == f.s_max == 10
