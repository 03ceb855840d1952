import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from leakbound.linear import Linear, LinearConstraint, bool_to_dnf
from leakbound.parser import parse_bool
from leakbound.region import (
    Count,
    Region,
    count_region,
    count_union,
    count_union_enum,
    join_boxes,
    meet_constraints,
    uniform_sample_region,
)

XY = {"x": (0, 9), "y": (0, 9)}
VARS = ("x", "y", "z")


def box_points(box):
    names = sorted(box)
    for vals in itertools.product(*(range(box[v][0], box[v][1] + 1) for v in names)):
        yield dict(zip(names, vals))


def as_set(points, names):
    return {tuple(p[v] for v in names) for p in points}


def diamond(cx, cy, r, box=XY):
    return [Region.from_box(box).meet(c) for c in bool_to_dnf(parse_bool(f"|x - {cx}| + |y - {cy}| <= {r}"))]


@st.composite
def boxes(draw, nvars=None):
    n = nvars or draw(st.integers(1, 3))
    box = {}
    for v in VARS[:n]:
        lo = draw(st.integers(-3, 5))
        box[v] = (lo, lo + draw(st.integers(0, 6)))
    return box


@st.composite
def constraints(draw, names):
    out = []
    for _ in range(draw(st.integers(0, 3))):
        coeffs = {v: draw(st.integers(-2, 2)) for v in names}
        lin = Linear.of({v: c for v, c in coeffs.items() if c}, draw(st.integers(-6, 6)))
        op = draw(st.sampled_from(["<=", "<=", "=="]))
        out.append(LinearConstraint.le(lin) if op == "<=" else LinearConstraint.eq(lin))
    return out


class TestCount:
    def test_box(self):
        assert count_region(Region.from_box(XY)) == Count.of(100)

    def test_diamond_union(self):
        assert count_union(diamond(4, 4, 4)) == Count.of(41)

    def test_equality_collapses(self):
        g = Region.from_box({"x": (0, 9), "d": (0, 18)}).meet([LinearConstraint.eq(Linear.var("d") - Linear.var("x"))])
        assert count_region(g) == Count.of(10)

    def test_budget_fallback(self):
        g = Region.from_box({"x": (0, 99), "y": (0, 99)}).meet([LinearConstraint.le(Linear.of({"x": 1, "y": 1}, -150))])
        c = count_region(g, budget=5)
        assert c.lo == 0 and c.hi >= count_region(g).hi

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_agrees_with_enumeration(self, data):
        box = data.draw(boxes())
        cs = data.draw(constraints(sorted(box)))
        g = meet_constraints(Region.from_box(box), cs)
        want = sum(all(c.holds(p) for c in cs) for p in box_points(box))
        assert count_region(g) == Count.of(want)


class TestMeet:
    def test_single_var(self):
        g = meet_constraints(Region.from_box({"x": (0, 9)}), [LinearConstraint.le(Linear.of({"x": 1}, -4))])
        assert g.box["x"] == (0, 4)

    def test_triangle(self):
        g = meet_constraints(Region.from_box(XY), [LinearConstraint.le(Linear.of({"x": 1, "y": 1}, -3))])
        # bounds propagate from the residual; the residual itself is kept
        assert g.box == {"x": (0, 3), "y": (0, 3)}
        assert len(g.residuals) == 1
        assert count_region(g) == Count.of(10)

    def test_empty(self):
        g = meet_constraints(Region.from_box({"x": (0, 9)}), [LinearConstraint.le(Linear.of({"x": -1}, 12))])
        assert g.is_empty

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_point_set_exact(self, data):
        box = data.draw(boxes())
        names = sorted(box)
        c1 = data.draw(constraints(names))
        c2 = data.draw(constraints(names))
        g = meet_constraints(meet_constraints(Region.from_box(box), c1), c2)
        want = {tuple(p[v] for v in names) for p in box_points(box) if all(c.holds(p) for c in c1 + c2)}
        assert as_set(g.points(), names) == want


class TestJoin:
    def test_hull(self):
        g = join_boxes(Region.from_box({"x": (0, 4)}), Region.from_box({"x": (6, 10)}))
        assert g.box["x"] == (0, 10)

    def test_offset_boxes(self):
        a = Region.from_box({"x": (0, 8), "y": (0, 8)})
        b = Region.from_box({"x": (6, 14), "y": (0, 8)})
        assert count_region(join_boxes(a, b)) == Count.of(135)

    def test_idempotent(self):
        g = Region.from_box(XY)
        assert join_boxes(g, g) == g

    def test_drops_residuals(self):
        a = meet_constraints(Region.from_box(XY), [LinearConstraint.le(Linear.of({"x": 1, "y": 1}, -3))])
        assert join_boxes(a, a).residuals == ()

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_sound(self, data):
        box = data.draw(boxes(2))
        names = sorted(box)
        a = meet_constraints(Region.from_box(box), data.draw(constraints(names)))
        b = meet_constraints(Region.from_box(box), data.draw(constraints(names)))
        j = join_boxes(a, b)
        for p in itertools.chain(a.points(), b.points()):
            assert j.contains(p)


class TestUnion:
    def test_disjoint_diamonds(self):
        wide = {"x": (0, 19), "y": (0, 9)}
        assert count_union(diamond(4, 4, 4, wide) + diamond(14, 4, 4, wide)) == Count.of(82)

    def test_overlapping_diamonds(self):
        wide = {"x": (0, 19), "y": (0, 9)}
        assert count_union(diamond(4, 4, 4, wide) + diamond(10, 4, 4, wide)) == Count.of(77)

    def test_self_union(self):
        g = meet_constraints(Region.from_box(XY), [LinearConstraint.le(Linear.of({"x": 1, "y": -1}, 0))])
        assert count_union([g, g]) == count_region(g)

    @settings(max_examples=80, deadline=None)
    @given(st.data())
    def test_ie_matches_enumeration(self, data):
        box = data.draw(boxes(2))
        names = sorted(box)
        gs = [meet_constraints(Region.from_box(box), data.draw(constraints(names))) for _ in range(data.draw(st.integers(1, 4)))]
        assert count_union(gs) == count_union_enum(gs)


class TestSample:
    def test_single_point(self):
        g = Region.from_box({"x": (3, 3), "y": (7, 7)})
        rng = random.Random(1)
        assert all(uniform_sample_region(g, rng) == {"x": 3, "y": 7} for _ in range(20))

    def test_chi_square(self):
        g = Region.from_box({"x": (0, 9)})
        rng = random.Random(7)
        counts = Counter(uniform_sample_region(g, rng)["x"] for _ in range(10_000))
        assert chisquare([counts[i] for i in range(10)]).pvalue > 0.01

    def test_respects_equality(self):
        g = Region.from_box({"x": (0, 9)}).define("d", Linear.var("x"))
        rng = random.Random(3)
        for _ in range(200):
            p = uniform_sample_region(g, rng)
            assert p["d"] == p["x"]

    def test_uniform_on_triangle(self):
        g = meet_constraints(Region.from_box(XY), [LinearConstraint.le(Linear.of({"x": 1, "y": 1}, -3))])
        rng = random.Random(11)
        counts = Counter(tuple(sorted(uniform_sample_region(g, rng).items())) for _ in range(5000))
        assert len(counts) == 10
        assert chisquare(list(counts.values())).pvalue > 0.01

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            uniform_sample_region(Region.empty(["x"]), random.Random(0))


class TestTransfer:
    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_assign_image(self, data):
        box = data.draw(boxes(2))
        names = sorted(box)
        g = meet_constraints(Region.from_box(box), data.draw(constraints(names)))
        coeffs = {v: data.draw(st.integers(-2, 2)) for v in names}
        lin = Linear.of({v: c for v, c in coeffs.items() if c}, data.draw(st.integers(-3, 3)))
        h, _ = g.assign("x", lin)
        want = {tuple({**p, "x": lin.eval(p)}[v] for v in names) for p in g.points()}
        got = as_set(h.points(), names)
        assert want <= got
        if all(c in (0,) for v, c in coeffs.items() if v != "x") and coeffs["x"] in (1, -1):
            assert got == want

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_forget_projection(self, data):
        box = data.draw(boxes(3))
        names = sorted(box)
        g = meet_constraints(Region.from_box(box), data.draw(constraints(names)))
        h, w = g.forget("z")
        keep = [v for v in names if v != "z"]
        want = as_set(g.points(), keep)
        assert want <= as_set(h.points(), keep)
        fibres = Counter(tuple(p[v] for v in keep) for p in g.points())
        assert max(fibres.values(), default=1) <= w
