"""
Exact counting by truncated products of box polynomials 1 + q + ... + q^c.

Multiplying a coefficient row by one box polynomial is a difference of
prefix sums: new[s] = P[s] - P[s - c - 1]. Rows are Python integers (exact)
or numpy float64 natural logs (approximate, for n*m beyond the exact
budget).
"""
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from math import comb
from typing import *

import numpy as np
from pydantic import BaseModel, validator

from .errors import BudgetExceededError, DomainError, EmptyClassError
from .permcore import Permutation, inv_count

EXACT_CELL_BUDGET = 50_000_000


@dataclass(frozen=True)
class CoefficientVector:
    coeffs: Tuple[int, ...]
    max_degree: int

    def __post_init__(self):
        if len(self.coeffs) != self.max_degree + 1:
            raise DomainError("coefficient vector length must be max_degree + 1")

    def __getitem__(self, s: int) -> int:
        if s < 0 or s > self.max_degree:
            return 0
        return self.coeffs[s]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def total(self) -> int:
        return sum(self.coeffs)


@dataclass(frozen=True)
class ExactProbability:
    num: int
    den: int
    approx: float

    @classmethod
    def from_counts(cls, num: int, den: int) -> "ExactProbability":
        if den == 0:
            raise EmptyClassError("probability over an empty class")
        f = Fraction(num, den)
        return cls(f.numerator, f.denominator, float(f))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def to_dict(self) -> Dict[str, Any]:
        return {"num": str(self.num), "den": str(self.den), "approx": self.approx}

    def __str__(self):
        return f"num={self.num} den={self.den} approx={self.approx!r}"


class CountQuery(BaseModel):
    n: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    ell: Optional[int] = None
    t: Optional[int] = None
    s: Optional[int] = None
    r: Optional[int] = None

    @validator("*")
    def nonnegative(cls, v, field):
        if v is not None and v < 0:
            raise ValueError(f"{field.name} must be nonnegative")
        return v

    def need(self, *names: str) -> List[int]:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise DomainError(f"missing parameter(s): {', '.join(missing)}")
        return [getattr(self, name) for name in names]


# ---------------------------------------------------------------------------
# kernels


def multiply_box(row: List[int], capacity: int) -> List[int]:
    prefix = list(accumulate(row))
    width = capacity + 1
    return [prefix[s] - (prefix[s - width] if s >= width else 0) for s in range(len(row))]


def log_multiply_box(row: np.ndarray, capacity: int) -> np.ndarray:
    prefix = np.logaddexp.accumulate(row)
    width = capacity + 1
    if width >= len(row):
        return prefix
    out = prefix.copy()
    head, tail = prefix[width:], prefix[:-width]
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.where(np.isfinite(tail), tail - head, -np.inf)
        out[width:] = head + np.log1p(-np.exp(diff))
    out[np.isnan(out)] = -np.inf
    return out


def capacity_poly(capacities: Iterable[int], max_degree: int) -> CoefficientVector:
    if max_degree < 0:
        raise DomainError("max_degree must be >= 0")
    row = [1] + [0] * max_degree
    for c in capacities:
        if c < 0:
            raise DomainError(f"negative capacity {c}")
        if c == 0:
            continue
        row = multiply_box(row, c)
    return CoefficientVector(tuple(row), max_degree)


def log_capacity_poly(capacities: Iterable[int], max_degree: int) -> np.ndarray:
    """Natural logs of capacity_poly coefficients (-inf for zeros); approximate."""
    if max_degree < 0:
        raise DomainError("max_degree must be >= 0")
    row = np.full(max_degree + 1, -np.inf)
    row[0] = 0.0
    for c in capacities:
        if c < 0:
            raise DomainError(f"negative capacity {c}")
        if c:
            row = log_multiply_box(row, c)
    return row


def check_budget(n: int, m: int, budget: int = EXACT_CELL_BUDGET):
    if n * m > budget:
        raise BudgetExceededError(f"exact counting of n={n}, m={m} needs {n * m} cells", budget)


def max_inversions(n: int) -> int:
    return n * (n - 1) // 2


# ---------------------------------------------------------------------------
# counts


def mahonian(n: int, m: int) -> int:
    if n < 0:
        raise DomainError("n must be >= 0")
    if m < 0 or m > max_inversions(n):
        return 0
    return capacity_poly(range(n), m)[m]


def mahonian_row(n: int, max_degree: Optional[int] = None) -> CoefficientVector:
    if max_degree is None:
        max_degree = max_inversions(n)
    return capacity_poly(range(n), max_degree)


def log_mahonian(n: int, m: int) -> float:
    if m < 0 or m > max_inversions(n):
        return -np.inf
    return float(log_capacity_poly(range(n), m)[m])


def weak_comp_count(t: int, s: int) -> int:
    if t < 0 or s < 0:
        raise DomainError("t and s must be nonnegative")
    if t == 0:
        return 1 if s == 0 else 0
    return comb(s + t - 1, s)


def restricted_comp_count(t: int, s: int, r: int) -> int:
    """Weak t-compositions of s with every term < r."""
    if t < 0 or s < 0 or r < 1:
        raise DomainError("need t >= 0, s >= 0, r >= 1")
    if r > s:
        return weak_comp_count(t, s)
    return capacity_poly([r - 1] * t, s)[s]


def suffix_capacities(t: int, r: int) -> range:
    return range(r, r + t)


def inv_suffix_count(t: int, s: int, r: int) -> int:
    """Weak t-compositions (e_1..e_t) of s with e_j < j + r."""
    if t < 0 or r < 0:
        raise DomainError("need t >= 0, r >= 0")
    if s < 0:
        return 0
    if t == 0:
        return 1 if s == 0 else 0
    if r >= s:
        return weak_comp_count(t, s)
    return capacity_poly(suffix_capacities(t, r), s)[s]


def prefix_count(n: int, m: int, k: int, ell: int) -> int:
    """
    Number of n-permutations with m inversions whose first k points form one
    fixed k-permutation with ell inversions.
    """
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0 <= ell <= max_inversions(k):
        raise DomainError(f"a {k}-permutation cannot have {ell} inversions")
    if m < ell:
        return 0
    return inv_suffix_count(n - k, m - ell, k)


def gap_capacities(n: int, k: int) -> List[int]:
    # boxes 1..k-1 hold the inversion sequence of p[2, k]; boxes k and k+1
    # (the adjoined first and last points) are folded into the weights
    return list(range(k - 1)) + list(range(k + 1, n))


def _gap_sums(g: Sequence[int], m: int, k: int) -> Tuple[int, int]:
    def at(s):
        return g[s] if 0 <= s < len(g) else 0

    up = sum((ell + 1) * at(m - ell) for ell in range(k))
    down = sum((2 * k - ell) * at(m - ell) for ell in range(k, 2 * k))
    return up, down


def gap_counts(n: int, m: int, k: int) -> Tuple[int, int]:
    """(N_up, N_down): S_{n,m} split by whether p(1) < p(k+1)."""
    if not 1 <= k <= n - 1:
        raise DomainError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    if m < 0:
        return 0, 0
    g = capacity_poly(gap_capacities(n, k), m)
    return _gap_sums(g.coeffs, m, k)


def approx_gap_prob(n: int, m: int, k: int) -> float:
    """Log-space version of exact_gap_prob for n*m beyond the exact budget."""
    if not 1 <= k <= n - 1:
        raise DomainError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    if not 0 <= m <= max_inversions(n):
        raise EmptyClassError(f"S_{{{n},{m}}} is empty")
    g = log_capacity_poly(gap_capacities(n, k), m)
    ells = np.arange(2 * k)
    idx = m - ells
    valid = idx >= 0
    logs = np.full(2 * k, -np.inf)
    logs[valid] = g[idx[valid]]
    weights = np.where(ells < k, ells + 1, 2 * k - ells).astype(float)
    with np.errstate(divide="ignore"):
        terms = logs + np.log(weights)
    up = np.logaddexp.reduce(terms[:k])
    down = np.logaddexp.reduce(terms[k:])
    return float(np.exp(down - np.logaddexp(up, down)))


def exact_pattern_prob(n: int, m: int, tau: Permutation) -> ExactProbability:
    k = tau.n
    if k > n:
        raise DomainError(f"pattern of length {k} does not fit in n={n}")
    total = mahonian(n, m)
    if total == 0:
        raise EmptyClassError(f"S_{{{n},{m}}} is empty")
    return ExactProbability.from_counts(prefix_count(n, m, k, inv_count(tau)), total)


def exact_gap_prob(n: int, m: int, k: int) -> ExactProbability:
    total = mahonian(n, m)
    if total == 0:
        raise EmptyClassError(f"S_{{{n},{m}}} is empty")
    _, down = gap_counts(n, m, k)
    return ExactProbability.from_counts(down, total)


# ---------------------------------------------------------------------------
# tripartition sums (parts A | B | C with boxes 1..k, k+1..r, r+1..n)


def prefix_count_tripartition(n: int, m: int, k: int, ell: int, r: int) -> int:
    if not k <= r <= n:
        raise DomainError(f"need k <= r <= n, got k={k}, r={r}, n={n}")
    budget = m - ell
    if budget < 0:
        return 0
    b = capacity_poly(suffix_capacities(r - k, k), budget)
    c = capacity_poly(suffix_capacities(n - r, r), budget)
    return sum(b[i] * c[budget - i] for i in range(budget + 1))


def gap_counts_tripartition(n: int, m: int, k: int, r: int) -> Tuple[int, int]:
    if not 1 <= k <= n - 1 or not k + 1 <= r <= n:
        raise DomainError(f"need 1 <= k < n and k+1 <= r <= n, got k={k}, r={r}, n={n}")
    if m < 0:
        return 0, 0
    a = capacity_poly(list(range(k - 1)) + list(range(k + 1, r)), m)
    c = capacity_poly(suffix_capacities(n - r, r), m)
    up = down = 0
    for i in range(m + 1):
        if not a[i]:
            continue
        for ell in range(k):
            up += a[i] * (ell + 1) * c[m - ell - i]
        for ell in range(k, 2 * k):
            down += a[i] * (2 * k - ell) * c[m - ell - i]
    return up, down


# ---------------------------------------------------------------------------


COUNT_KINDS = ("mahonian", "weakcomp", "restricted", "suffix", "prefix", "gap")


def count(kind: str, query: CountQuery) -> Union[int, Tuple[int, int]]:
    if kind == "mahonian":
        return mahonian(*query.need("n", "m"))
    elif kind == "weakcomp":
        return weak_comp_count(*query.need("t", "s"))
    elif kind == "restricted":
        return restricted_comp_count(*query.need("t", "s", "r"))
    elif kind == "suffix":
        return inv_suffix_count(*query.need("t", "s", "r"))
    elif kind == "prefix":
        return prefix_count(*query.need("n", "m", "k", "ell"))
    elif kind == "gap":
        return gap_counts(*query.need("n", "m", "k"))
    raise DomainError(f"unknown count kind {kind!r}; expected one of {', '.join(COUNT_KINDS)}")
