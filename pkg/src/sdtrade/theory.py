"""Special functions and the closed-form detection / false-positive bounds.

All functions are pure. Bounds that are probabilities by construction are
clamped to [0, 1]; the gradient-concentration bound is returned raw because a
non-positive value would be vacuous and callers report that state instead of
hiding it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_EPS = 1e-15
_MAX_ITER = 10_000


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF, absolute error well below 1e-10."""
    return 0.5 * math.erfc(-z / _SQRT2)


def _lower_gamma_series(s: float, x: float) -> float:
    # Power series for the regularized lower incomplete gamma, best for x < s + 1.
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise DomainError(f"series for P({s}, {x}) did not converge")


def _upper_gamma_cf(s: float, x: float) -> float:
    # Modified Lentz continued fraction for the regularized upper tail Q(s, x),
    # best for x >= s + 1.
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise DomainError(f"continued fraction for Q({s}, {x}) did not converge")


def reg_lower_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s).

    Evaluated by the power series for x < s + 1 and by a continued fraction
    for the upper tail otherwise; absolute error below 1e-8 across the tested
    grid.
    """
    if s <= 0:
        raise DomainError(f"s must be positive, got {s}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return min(1.0, _lower_gamma_series(s, x))
    return max(0.0, 1.0 - _upper_gamma_cf(s, x))


@dataclass(frozen=True)
class BoundInput:
    """Parameter bundle for the Lipschitz-extractor detection bound.

    ``lipschitz_ratio`` is the upper/lower distance-distortion constant ratio
    of the extractor, ``spread`` the expected distance between two natural
    queries, and ``beta`` the attacker's perturbation standard deviation.
    ``k``, ``epsilon``, and ``sigma`` ride along for experiment bookkeeping.
    """

    d: int
    beta: float
    alpha_fp: float
    lipschitz_ratio: float
    spread: float
    k: int = 1
    epsilon: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"d must be >= 1, got {self.d}")
        if self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not 0.0 <= self.alpha_fp < 1.0:
            raise DomainError(f"alpha_fp must be in [0, 1), got {self.alpha_fp}")
        if self.lipschitz_ratio < 1:
            raise DomainError(f"lipschitz_ratio must be >= 1, got {self.lipschitz_ratio}")
        if self.spread <= 0:
            raise DomainError(f"spread must be positive, got {self.spread}")
        if self.k < 1:
            raise DomainError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon must be in [0, 1], got {self.epsilon}")


def toy_bound(d: int, beta: float, alpha_fp: float) -> float:
    """Detection-rate upper bound for the rounding quantizer.

    With natural queries concentrated at lattice points and perturbations of
    standard deviation beta, the detection rate is at most

        1 - (2 - 2 Phi(0.5 / beta))^d (1 - alpha_fp),

    clamped to [0, 1]. The escape factor per coordinate is the probability
    that a single N(0, beta²) step leaves the half-unit bin.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not 0.0 <= alpha_fp <= 1.0:
        raise DomainError(f"alpha_fp must be in [0, 1], got {alpha_fp}")
    escape = 2.0 - 2.0 * std_normal_cdf(0.5 / beta)
    bound = 1.0 - escape**d * (1.0 - alpha_fp)
    return min(1.0, max(0.0, bound))


def general_bound(inp: BoundInput) -> float:
    """Detection-rate upper bound for a two-sided Lipschitz extractor.

    Equals P(d/2, z²/2) with z = lipschitz_ratio * spread / (beta * (1 -
    alpha_fp)); the chi-distribution mass of perturbations small enough to be
    flagged at the largest threshold consistent with the false-positive rate.
    """
    if inp.alpha_fp >= 1.0:
        raise DomainError("alpha_fp = 1 leaves the threshold unconstrained")
    z = inp.lipschitz_ratio * inp.spread / (inp.beta * (1.0 - inp.alpha_fp))
    return reg_lower_gamma(inp.d / 2.0, 0.5 * z * z)


def gradient_bound(k: int, epsilon: float, beta: float) -> float:
    """Lower bound on the probability that a k-row Gaussian projection
    preserves the gradient norm to within a factor 1 +/- epsilon:

        1 - 2 exp(-k - (1 + epsilon) / (2 beta²)).

    Returned unclamped; a value <= 0 would be vacuous (callers flag it). For
    k >= 1 the value is always positive, but it is only empirically sharp
    near k * beta² = 1.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"epsilon must be in [0, 1], got {epsilon}")
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return 1.0 - 2.0 * math.exp(-k - (1.0 + epsilon) / (2.0 * beta * beta))


def vacuous(bound: float) -> bool:
    """True when a probability lower bound carries no information."""
    return bound <= 0.0


def projection_tail_bound(k: int, epsilon: float, sigma: float) -> float:
    """Tail bound for the squared norm of a Gaussian projection of a unit
    vector: P[| |Gv|² - 1 | > epsilon] <= 2 exp(-(k + (epsilon + 1) / (2 sigma²))).

    This is the concentration inequality underlying :func:`gradient_bound`;
    the two are related by bound = 1 - tail.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"epsilon must be in [0, 1], got {epsilon}")
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return 2.0 * math.exp(-(k + (epsilon + 1.0) / (2.0 * sigma * sigma)))


def chi_cdf(r: float, d: int, beta: float) -> float:
    """P[|u| <= r] for u ~ N(0, I_d beta²): the chi distribution CDF,
    P(d/2, r² / (2 beta²))."""
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return reg_lower_gamma(d / 2.0, r * r / (2.0 * beta * beta))
