"""
Closed-form limit probabilities and tail bounds, evaluated in log space so
they stay finite for k up to 1e4 and binomial arguments up to 1e12.
"""
import math
from fractions import Fraction
from math import comb
from typing import *

import numpy as np
from pydantic import BaseModel, validator
from scipy.special import gammaln

from .errors import DomainError
from .permcore import Permutation, inv_count

SERIES_SWITCH = 1e-4
LOG_TERMS_MAX = 10_000_000
ALPHA_RULES = ("finite", "asymptotic")


class RegimeParams(BaseModel):
    alpha: Optional[float] = None
    rho: Optional[float] = None
    beta: Optional[float] = None
    theta: Optional[float] = None
    epsilon: Optional[float] = None
    x: Optional[int] = None
    y: Optional[int] = None
    delta: Optional[int] = None

    @validator("alpha", "epsilon")
    def positive(cls, v, field):
        if v is not None and not v > 0:
            raise ValueError(f"{field.name} must be positive")
        return v

    @validator("rho")
    def unit_interval(cls, v):
        if v is not None and not 0 <= v <= 1:
            raise ValueError("rho must lie in [0, 1]")
        return v

    @validator("beta", "theta", "x", "y", "delta")
    def nonnegative(cls, v, field):
        if v is not None and v < 0:
            raise ValueError(f"{field.name} must be nonnegative")
        return v

    def need(self, *names: str) -> List[Any]:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise DomainError(f"missing parameter(s): {', '.join(missing)}")
        return [getattr(self, name) for name in names]


def _log_factorial(k: int) -> float:
    return float(gammaln(k + 1))


def pattern_density(tau: Permutation) -> float:
    # a single point has no pairs; 1/2 makes the exponent vanish
    if tau.n < 2:
        return 0.5
    return inv_count(tau) / (tau.n * (tau.n - 1) / 2)


def pattern_prob_critical(rho: float, alpha: float, k: int) -> float:
    """exp((1 - 2 rho) alpha^2 / 4) / k!"""
    if not 0 <= rho <= 1 or alpha < 0 or k < 1:
        raise DomainError("need 0 <= rho <= 1, alpha >= 0, k >= 1")
    exponent = (1 - 2 * rho) * alpha * alpha / 4
    if k <= 170:
        return math.exp(exponent) / math.factorial(k)
    return math.exp(exponent - _log_factorial(k))


def gap_prob_critical(alpha: float) -> float:
    """(e^a (a - 1) + 1) / (e^a - 1)^2, the limit of P(p(j) > p(j+k)) at k ~ a m/n."""
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    if alpha < SERIES_SWITCH:
        return 0.5 - alpha / 6 + alpha**3 / 180
    # same expression multiplied through by e^{-2a}
    tail = math.exp(-alpha)
    return (alpha + math.expm1(-alpha)) * tail / math.expm1(-alpha) ** 2


def hoeffding_density_bound(theta: float, n: int) -> float:
    if theta < 0 or n < 1:
        raise DomainError("need theta >= 0 and n >= 1")
    return 2 * math.exp(-theta * theta * n)


def comp_tail_threshold(t: int, s: int, epsilon: float) -> Tuple[float, float]:
    """(threshold, bound): some term of a uniform weak t-composition of s
    reaches the threshold with probability at most the bound."""
    if t < 2 or s < 0 or not epsilon > 0:
        raise DomainError("need t >= 2, s >= 0, epsilon > 0")
    return (1 + epsilon) * (s / t) * math.log(t), t ** (-epsilon / 2)


def log_binom_ratio(y: int, x: int, delta: int) -> float:
    if x < 0 or delta < 0 or x > y - delta:
        raise DomainError(f"need 0 <= x <= y - delta, got y={y}, x={x}, delta={delta}")
    if x == 0 or delta == 0:
        return 0.0
    if min(x, delta) > LOG_TERMS_MAX:
        return float(gammaln(y + 1) - gammaln(y - x + 1) - gammaln(y - delta + 1) + gammaln(y - delta - x + 1))
    if x <= delta:
        i = np.arange(x, dtype=float)
        return float(np.log1p(delta / (y - delta - i)).sum())
    i = np.arange(delta, dtype=float)
    return float(-np.log1p(-x / (y - i)).sum())


def binom_ratio(y: int, x: int, delta: int) -> float:
    """C(y, x) / C(y - delta, x)."""
    with np.errstate(over="ignore"):
        return float(np.exp(log_binom_ratio(y, x, delta)))


def prefix_ratio_prediction(beta: float) -> float:
    if beta < 0:
        raise DomainError("beta must be >= 0")
    return math.exp(-beta)


# ---------------------------------------------------------------------------
# finite-size scales


def finite_rate(n: int, m: int) -> float:
    """log(1 + n/m): the per-ball decay of suffix counts, ~ n/m when n << m."""
    if n < 1 or m < 1:
        raise DomainError("need n >= 1 and m >= 1")
    return math.log1p(n / m)


def _check_rule(rule: str):
    if rule not in ALPHA_RULES:
        raise DomainError(f"unknown alpha rule {rule!r}; expected one of {', '.join(ALPHA_RULES)}")


def pattern_alpha(n: int, m: int, k: int, rule: str = "finite") -> float:
    _check_rule(rule)
    if rule == "asymptotic":
        return k * math.sqrt(n / m)
    return math.sqrt(k * (k - 1) * finite_rate(n, m))


def gap_alpha(n: int, m: int, k: int, rule: str = "finite") -> float:
    _check_rule(rule)
    if rule == "asymptotic":
        return k * n / m
    return k * finite_rate(n, m)


# ---------------------------------------------------------------------------
# weighted binomial sums behind the gap limit


def weighted_binomial_sums(y: int, x: int, k: int) -> Tuple[int, int]:
    """
    S_up   = sum_{l<k} (l+1) C(y-l, x)
    S_down = sum_{l<k} (l+1) C(y-2k+1+l, x)
    in closed form; needs y >= x + 2k so every binomial is a proper one.
    """
    if x < 0 or k < 1 or y < x + 2 * k:
        raise DomainError(f"need x >= 0, k >= 1, y >= x + 2k; got y={y}, x={x}, k={k}")
    den = (x + 1) * (x + 2)
    up = (y + 1) * (y + 2) * comb(y, x) - (y + 1 - k) * (y + 2 + x * k + k) * comb(y - k, x)
    down = (y - x - 2 * k) * (y + 1 - x - 2 * k) * comb(y + 1 - 2 * k, x) - (y + 1 - x - k) * (
        y - x * k - x - 3 * k
    ) * comb(y + 1 - k, x)
    assert up % den == 0 and down % den == 0
    return up // den, down // den


def gap_prob_from_sums(y: int, x: int, k: int) -> Fraction:
    """S_down / (S_up + S_down); tends to gap_prob_critical(k x / y)."""
    up, down = weighted_binomial_sums(y, x, k)
    return Fraction(down, up + down)


# ---------------------------------------------------------------------------


PREDICT_KINDS = ("pattern", "gap", "hoeffding", "comptail", "binomratio", "prefixratio")


def predict(kind: str, params: RegimeParams, k: Optional[int] = None, n: Optional[int] = None,
            t: Optional[int] = None, s: Optional[int] = None) -> Dict[str, float]:
    if kind == "pattern":
        rho, alpha = params.need("rho", "alpha")
        if k is None:
            raise DomainError("missing parameter(s): k")
        return {"prob": pattern_prob_critical(rho, alpha, k)}
    elif kind == "gap":
        (alpha,) = params.need("alpha")
        return {"prob": gap_prob_critical(alpha)}
    elif kind == "hoeffding":
        (theta,) = params.need("theta")
        if n is None:
            raise DomainError("missing parameter(s): n")
        return {"bound": hoeffding_density_bound(theta, n)}
    elif kind == "comptail":
        (epsilon,) = params.need("epsilon")
        if t is None or s is None:
            raise DomainError("missing parameter(s): t, s")
        threshold, bound = comp_tail_threshold(t, s, epsilon)
        return {"threshold": threshold, "bound": bound}
    elif kind == "binomratio":
        return {"ratio": binom_ratio(*params.need("y", "x", "delta"))}
    elif kind == "prefixratio":
        (beta,) = params.need("beta")
        return {"ratio": prefix_ratio_prediction(beta)}
    raise DomainError(f"unknown prediction kind {kind!r}; expected one of {', '.join(PREDICT_KINDS)}")
