"""Simplex-sandwich measurements and closed-form ratio bounds.

The dual feasible set W = {w >= 0 : B^T w <= d_bar e} always contains
the scaled simplex S = {w >= 0 : sum w <= d_bar/b} when no entry of B
exceeds b, and sits inside kappa * S with kappa read off one LP that
maximizes sum(w) over W.  Whenever that sandwich holds, the affine
policy is within a factor kappa of fully adjustable, so the reports
here turn a raw coefficient matrix into a certified ratio bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instances import InstanceError
from .lp import LinearProgram, solve_lp


@dataclass(frozen=True)
class SandwichReport:
    kappa_emp: float       # (b/d_bar) * simplex_sum_max, the sharp kappa
    inner_radius: float    # d_bar/b, the scale of the inner simplex
    contains_S: bool
    simplex_sum_max: float
    predicted_bound: float  # theorem value when mu was supplied, else nan
    b: float
    b_empirical: bool      # b fell back to the largest observed entry


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    tau: float
    ratio_bound: float     # inf outside the regime
    regime_valid: bool


def kappa_sandwich(B, d_bar: float = 1.0, b: float | None = None,
                   mu: float | None = None) -> SandwichReport:
    """Measure how tightly W is sandwiched between S and kappa*S.

    `b` defaults to the largest entry of B (flagged as empirical, the
    right call for unbounded supports).  Passing the distribution mean
    `mu` adds the matching closed-form prediction for comparison.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.size == 0:
        raise InstanceError("B must be a nonempty matrix")
    if not np.isfinite(B).all() or (B < 0).any():
        raise InstanceError("B must be nonnegative and finite")
    if d_bar <= 0:
        raise InstanceError("d_bar must be positive")
    m, n = B.shape
    if (B.max(axis=1) <= 0).any():
        raise InstanceError(
            "W is unbounded: some row of B is all zero, so sum(w) has no "
            "maximum over W")

    b_emp = b is None
    if b is None:
        b = float(B.max())
    if b <= 0:
        raise InstanceError("b must be positive")

    # one LP: max sum(w) over B^T w <= d_bar, w >= 0
    lp = LinearProgram.from_arrays(
        "max", np.ones(m), B.T, ["<="] * n, np.full(n, d_bar))
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise InstanceError(f"sum LP over W ended {sol.status}")
    sum_max = float(sol.objective)

    kappa = (b / d_bar) * sum_max
    contains = bool(B.max() <= b * (1 + 1e-12))
    predicted = math.nan
    if mu is not None:
        rep = theorem1_bound(b, mu, m, n)
        predicted = rep.ratio_bound
    return SandwichReport(kappa_emp=kappa, inner_radius=d_bar / b,
                          contains_S=contains, simplex_sum_max=sum_max,
                          predicted_bound=predicted, b=b, b_empirical=b_emp)


def theorem1_bound(b: float, mu: float, m: int, n: int) -> BoundReport:
    """Closed-form affine-vs-adjustable ratio for iid entries in [0, b].

    epsilon = (b/mu) sqrt(ln m / n); the bound b/(mu (1 - epsilon))
    holds with probability at least 1 - 1/m while epsilon < 1.
    """
    if b <= 0 or mu <= 0:
        raise ValueError("b and mu must be positive")
    if m < 2 or n < 2:
        raise ValueError("m and n must be at least 2")
    root = math.sqrt(math.log(m) / n)
    tau = b * root
    eps = (b / mu) * root
    valid = eps < 1.0
    ratio = b / (mu * (1.0 - eps)) if valid else math.inf
    return BoundReport(epsilon=eps, tau=tau, ratio_bound=ratio,
                       regime_valid=valid)


def theorem2_bound(m: int, n: int) -> float:
    """Ratio bound sqrt(6 ln(mn)) / (sqrt(2/pi) - 2 sqrt(ln m / n)) for
    half-normal entries; only meaningful once the denominator is positive."""
    if m < 2 or n < 2:
        raise ValueError("m and n must be at least 2")
    denom = math.sqrt(2.0 / math.pi) - 2.0 * math.sqrt(math.log(m) / n)
    if denom <= 0:
        raise ValueError(
            f"outside the regime: sqrt(2/pi) - 2 sqrt(ln m / n) = "
            f"{denom:.4f} <= 0 at m={m}, n={n}")
    return math.sqrt(6.0 * math.log(m * n)) / denom


def worstcase_lower_bound(m: int) -> float:
    """Certified floor (m-1)/(6 sqrt(m)) on the affine value of the
    deterministic hard family, whose fully adjustable value is 1."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return (m - 1) / (6.0 * math.sqrt(m))
