import random
from fractions import Fraction

import pytest

from leakbound.parser import parse_stmt
from leakbound.probpoly import Powerset, ProbPoly
from leakbound.region import Region

ONE_DIAMOND = "d_l1 := |s_x - 4| + |s_y - 4|; if d_l1 <= 4 { out := 1 } else { out := 0 }"
TWO_DIAMONDS = (
    "d_l1 := |s_x - 4| + |s_y - 4|; d_l2 := |s_x - 10| + |s_y - 4|; "
    "if d_l1 <= 4 || d_l2 <= 4 { out := 1 } else { out := 0 }"
)
GRID = {"s_x": (0, 9), "s_y": (0, 9)}
WIDE_GRID = {"s_x": (0, 19), "s_y": (0, 9)}
CENT = Fraction(1, 100)


@pytest.fixture
def one_diamond():
    return parse_stmt(ONE_DIAMOND)


@pytest.fixture
def two_diamonds():
    return parse_stmt(TWO_DIAMONDS)


@pytest.fixture
def grid_prior():
    return Powerset.uniform(GRID, CENT)


def joined_two_diamond_element() -> Powerset:
    """The single joined element a low-precision run yields for out = 1."""
    g = Region.from_box({"s_x": (0, 14), "s_y": (0, 8)})
    e = ProbPoly.make(g, 55, 82, CENT, 2 * CENT, Fraction(55, 100), Fraction(82, 100))
    return Powerset.of([e], g.vars, 1)


# ---------------------------------------------------------------------------
# random loop-free programs

SECRET_NAMES = ("a", "b", "c")
PROBS = (Fraction(1, 2), Fraction(1, 3), Fraction(3, 4))


def _rand_lin(rng, vars_):
    terms = []
    for v in rng.sample(vars_, k=rng.randint(1, min(2, len(vars_)))):
        c = rng.choice((1, 1, -1, 2))
        terms.append(v if c == 1 else f"0 - {v}" if c == -1 else f"{c} * {v}")
    e = " + ".join(terms)
    k = rng.randint(-4, 8)
    e = f"{e} + {k}" if k >= 0 else f"{e} - {-k}"
    if rng.random() < 0.25:
        e = f"|{e}|"
    return e


def _rand_cond(rng, vars_):
    op = rng.choice(("<=", "<", ">=", ">", "==", "!="))
    c = f"{_rand_lin(rng, vars_)} {op} {rng.randint(0, 12)}"
    r = rng.random()
    if r < 0.2:
        c = f"{c} && {_rand_lin(rng, vars_)} <= {rng.randint(0, 15)}"
    elif r < 0.35:
        c = f"{c} || {_rand_lin(rng, vars_)} >= {rng.randint(0, 15)}"
    return c


def _rand_block(rng, secrets, depth, budget, clobber=False):
    stmts = []
    for _ in range(rng.randint(1, 2)):
        kind = rng.random()
        if depth < 2 and kind < 0.45:
            stmts.append(
                f"if {_rand_cond(rng, secrets)} {{ {_rand_block(rng, secrets, depth + 1, budget, clobber)} }} "
                f"else {{ {_rand_block(rng, secrets, depth + 1, budget, clobber)} }}"
            )
        elif depth < 2 and kind < 0.6 and budget[0] > 0:
            budget[0] -= 1
            q = rng.choice(PROBS)
            stmts.append(
                f"pif {q.numerator}/{q.denominator} {{ {_rand_block(rng, secrets, depth + 1, budget, clobber)} }} "
                f"else {{ {_rand_block(rng, secrets, depth + 1, budget, clobber)} }}"
            )
        elif clobber and kind < 0.7:
            # overwrite a secret, possibly one a guard just read
            stmts.append(f"{rng.choice(secrets)} := {_rand_lin(rng, secrets)}")
        elif kind < 0.8:
            stmts.append(f"r := {rng.randint(0, 2)}")
        else:
            stmts.append(f"t := {_rand_lin(rng, secrets)}")
    return "; ".join(stmts)


def random_program(seed: int, clobber: bool = False):
    """A loop-free query over at most three secrets with ranges inside [0, 15].

    With ``clobber`` the body may also assign to secrets.
    """
    rng = random.Random(seed)
    k = rng.randint(1, 3)
    secrets = list(SECRET_NAMES[:k])
    ranges = {}
    for x in secrets:
        lo = rng.randint(0, 8)
        ranges[x] = (lo, rng.randint(lo, min(15, lo + (7 if k == 3 else 12))))
    body = f"r := 0; t := 0; {_rand_block(rng, secrets, 0, [2], clobber)}"
    if rng.random() < 0.5:
        body += f"; if t > {rng.randint(0, 6)} {{ r := r + 1 }}"
    return parse_stmt(body), ranges


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
