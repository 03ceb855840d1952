"""Equal-tailed Beta credible intervals for a success fraction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy.special import betainc, betaincinv

GRID = 10**6


@dataclass(frozen=True)
class BetaCounts:
    alpha: int = 0
    beta: int = 0

    @property
    def total(self) -> int:
        return self.alpha + self.beta

    def add(self, success: bool) -> "BetaCounts":
        return BetaCounts(self.alpha + success, self.beta + (not success))


@dataclass(frozen=True)
class CredibleInterval:
    p_L: Fraction
    p_U: Fraction
    omega: float

    def __post_init__(self):
        if not 0 <= self.p_L <= self.p_U <= 1:
            raise ValueError(f"bad interval [{self.p_L}, {self.p_U}]")


def beta_quantile(a: float, b: float, q: float) -> float:
    """q-quantile of Beta(a, b)."""
    return float(betaincinv(a, b, q))


def beta_cdf(a: float, b: float, x: float) -> float:
    return float(betainc(a, b, x))


def credible_interval(c: BetaCounts, omega: float) -> CredibleInterval:
    """Interval of Beta(alpha + 1, beta + 1) leaving (1 - omega)/2 in each tail.

    Endpoints are rounded outward to multiples of 1e-6.
    """
    if not 0 < omega < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {omega}")
    a, b = c.alpha + 1, c.beta + 1
    lo = beta_quantile(a, b, (1 - omega) / 2)
    hi = beta_quantile(a, b, (1 + omega) / 2)
    p_L = Fraction(max(0, math.floor(lo * GRID)), GRID)
    p_U = Fraction(min(GRID, math.ceil(hi * GRID)), GRID)
    return CredibleInterval(p_L, p_U, omega)
