"""
Uniform random generation from S_{n,m}.

Both samplers work on inversion sequences. The DP sampler draws
e_n, e_{n-1}, ..., e_2 backwards with P(e_j = v | s balls left) proportional
to T_{j-1}(s - v), T being the Mahonian rows of the partial box systems.
The tilted sampler draws every e_j independently from a q-weighted
truncated geometric law and keeps the vector only if it sums to m; the
weight q^m is constant on S_{n,m}, so accepted vectors are uniform.
"""
import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import accumulate
from typing import *

import numpy as np
from scipy import optimize

from . import qcount
from .errors import DomainError, TrialsExhaustedError
from .permcore import Permutation, from_inv_sequence, inv_count
from .rng import RngStream
from .utils import logger

SAMPLER_METHODS = ("dp", "tilted", "auto")
INT64_SAFE = 1 << 62
MAX_BATCH_CELLS = 1 << 22
SERIES_SWITCH = 1e-4


def _check_class(n: int, m: int):
    if n < 0:
        raise DomainError("n must be >= 0")
    if not 0 <= m <= qcount.max_inversions(n):
        raise DomainError(f"m={m} outside 0..{qcount.max_inversions(n)} for n={n}")


# ---------------------------------------------------------------------------
# DP sampler


class MahonianTable:
    """
    Rows T_0..T_n of the box system truncated at degree m, of which only
    every `stride`-th row is stored; the backward pass recomputes one block
    of rows at a time, so memory stays at O(m * sqrt(n)) numbers.

    exact=True keeps rows as Python integers (numpy int64 when every
    prefix sum fits); exact=False keeps natural logs in float64, which is
    approximate-uniform.
    """

    def __init__(self, n: int, m: int, exact: bool = True) -> None:
        _check_class(n, m)
        self.n = n
        self.m = m
        self.exact = exact
        self.stride = max(1, math.isqrt(max(n - 1, 0)) + 1)
        self.checkpoints: Dict[int, Any] = {}

        row = self._first_row()
        for j in range(n + 1):
            if j % self.stride == 0:
                self.checkpoints[j] = row
            if j < n:
                row = self._next_row(row, j)
        self.last_row = row
        self.int64 = exact and sum(row) < INT64_SAFE

    def _first_row(self):
        if self.exact:
            return [1] + [0] * self.m
        row = np.full(self.m + 1, -np.inf)
        row[0] = 0.0
        return row

    def _next_row(self, row, capacity: int):
        # row j+1 = row j times the polynomial of box j+1 (capacity j)
        if capacity == 0:
            return row
        if self.exact:
            return qcount.multiply_box(row, capacity)
        return qcount.log_multiply_box(row, capacity)

    def _block(self, start: int, stop: int) -> List[Any]:
        rows = [self.checkpoints[start]]
        for j in range(start, stop - 1):
            rows.append(self._next_row(rows[-1], j))
        return rows

    def row(self, j: int):
        if not 0 <= j <= self.n:
            raise DomainError(f"row {j} outside 0..{self.n}")
        if j == self.n:
            return self.last_row
        start = j - j % self.stride
        return self._block(start, j + 1)[-1]

    @property
    def class_size(self) -> int:
        if not self.exact:
            raise DomainError("class size is only exact for exact tables")
        return self.last_row[self.m]

    def draw_codes(self, count: int, rng: RngStream, keep: Optional[int] = None) -> np.ndarray:
        """First `keep` terms of `count` independent uniform inversion sequences."""
        keep = self.n if keep is None else min(keep, self.n)
        codes = np.zeros((count, keep), dtype=np.int64)
        states = np.full(count, self.m, dtype=np.int64)
        if self.exact and not self.int64:
            py_states = [self.m] * count

        top = self.n - 1
        for start in range(top - top % self.stride, -1, -self.stride):
            stop = min(start + self.stride, self.n)
            block = self._block(start, stop)
            for offset in range(len(block) - 1, -1, -1):
                j = start + offset + 1  # box j drawn against row j-1
                if j < 2:
                    continue
                row = block[offset]
                if self.exact and not self.int64:
                    values = self._draw_bigint(row, j, py_states, rng)
                    for i, v in enumerate(values):
                        py_states[i] -= v
                    values = np.asarray(values, dtype=np.int64)
                elif self.exact:
                    values = self._draw_int64(row, j, states, rng)
                else:
                    values = self._draw_log(row, j, states, rng)
                states -= values
                if j <= keep:
                    codes[:, j - 1] = values

        if __debug__:
            assert not states.any(), "backward pass left undistributed balls"
        return codes

    @staticmethod
    def _draw_bigint(row, j, states, rng):
        prefix = list(accumulate(row))
        values = []
        for s in states:
            low = prefix[s - j] if s >= j else 0
            u = rng.randbelow(prefix[s] - low)
            t = bisect.bisect_left(prefix, prefix[s] - u) - 1
            values.append(s - 1 - t)
        return values

    @staticmethod
    def _draw_int64(row, j, states, rng):
        prefix = np.cumsum(np.asarray(row, dtype=np.int64))
        low = np.where(states >= j, prefix[np.maximum(states - j, 0)], 0)
        u = rng.integers(0, prefix[states] - low)
        t = np.searchsorted(prefix, prefix[states] - u, side="left") - 1
        return states - 1 - t

    @staticmethod
    def _draw_log(row, j, states, rng):
        prefix = np.logaddexp.accumulate(row)
        top = prefix[states]
        below = np.where(states >= j, prefix[np.maximum(states - j, 0)], -np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_total = top + np.log1p(-np.exp(below - top))
            u = rng.random(len(states))
            threshold = top + np.log1p(-u * np.exp(log_total - top))
        t = np.searchsorted(prefix, threshold, side="left") - 1
        t = np.clip(t, states - j, states - 1)
        return states - 1 - t


@lru_cache(maxsize=4)
def get_table(n: int, m: int, exact: bool = True) -> MahonianTable:
    logger.debug(f"building {'exact' if exact else 'log-space'} table n={n} m={m}")
    return MahonianTable(n, m, exact)


def dp_is_exact(n: int, m: int, exact_budget: int = qcount.EXACT_CELL_BUDGET) -> bool:
    return n * m <= exact_budget


def sample_codes_dp(
    n: int,
    m: int,
    count: int,
    rng: RngStream,
    keep: Optional[int] = None,
    exact_budget: int = qcount.EXACT_CELL_BUDGET,
) -> np.ndarray:
    _check_class(n, m)
    return get_table(n, m, dp_is_exact(n, m, exact_budget)).draw_codes(count, rng, keep)


def sample_perm_dp(n: int, m: int, rng: RngStream, exact_budget: int = qcount.EXACT_CELL_BUDGET) -> Permutation:
    codes = sample_codes_dp(n, m, 1, rng, exact_budget=exact_budget)
    p = from_inv_sequence(tuple(int(e) for e in codes[0]))
    if __debug__:
        assert inv_count(p) == m
    return p


# ---------------------------------------------------------------------------
# tilted sampler


@dataclass(frozen=True)
class TiltParams:
    q: float
    lam: float  # -log q
    target_mean: float
    residual: float
    reflected: bool = False


def _box_means(lam: float, n: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    if lam == 0:
        return (j - 1) / 2
    x = j * lam
    with np.errstate(over="ignore", divide="ignore"):
        closed = 1 / np.expm1(lam) - j / np.expm1(x)
    series = (j - 1) / 2 - lam * (j * j - 1) / 12
    return np.where(x < SERIES_SWITCH, series, closed)


def _box_variances(lam: float, n: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    if lam == 0:
        return (j * j - 1) / 12
    x = j * lam
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        closed = 1 / (4 * np.sinh(lam / 2) ** 2) - j * j / (4 * np.sinh(x / 2) ** 2)
    return np.where(x < SERIES_SWITCH, (j * j - 1) / 12, np.maximum(closed, 0.0))


def tilted_mean(n: int, q: float) -> float:
    """Sum over boxes of the q-tilted mean; strictly increasing in q."""
    return float(_box_means(-math.log(q), n).sum())


def solve_tilt(n: int, m: float) -> TiltParams:
    half = qcount.max_inversions(n) / 2
    if not 0 < m < 2 * half:
        raise DomainError(f"tilting needs 0 < m < {int(2 * half)}, got m={m}")
    reflected = m > half
    target = 2 * half - m if reflected else m
    if target == half:
        return TiltParams(1.0, 0.0, m, 0.0, reflected)

    def excess(lam):
        return float(_box_means(lam, n).sum()) - target

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2
    lam = optimize.brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return TiltParams(math.exp(-lam), lam, m, excess(lam), reflected)


def tilted_total_sd(n: int, m: float) -> float:
    """Standard deviation of the tilted total; acceptance is about 1/(sd*sqrt(2*pi))."""
    params = solve_tilt(n, m)
    return float(math.sqrt(_box_variances(params.lam, n).sum()))


def _draw_tilted(lam: float, n: int, rows: int, rng: RngStream) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    u = rng.random((rows, n))
    if lam == 0:
        values = np.floor(u * j)
    else:
        values = np.floor(-np.log1p(u * np.expm1(-j * lam)) / lam)
    return np.minimum(values, j - 1).astype(np.int64)


def sample_codes_tilted(
    n: int,
    m: int,
    count: int,
    rng: RngStream,
    keep: Optional[int] = None,
    max_trials: Optional[int] = None,
) -> np.ndarray:
    _check_class(n, m)
    keep = n if keep is None else min(keep, n)
    top = qcount.max_inversions(n)
    if m == 0 or m == top:
        row = np.zeros(n, dtype=np.int64) if m == 0 else np.arange(n, dtype=np.int64)
        return np.tile(row[:keep], (count, 1))

    params = solve_tilt(n, m)
    target = top - m if params.reflected else m
    sd = math.sqrt(_box_variances(params.lam, n).sum())
    per_sample = max(1.0, sd * math.sqrt(2 * math.pi))
    if max_trials is None:
        max_trials = int(1000 * per_sample * count) + 10_000

    accepted: List[np.ndarray] = []
    have = 0
    trials = 0
    while have < count:
        if trials >= max_trials:
            raise TrialsExhaustedError(f"tilted sampler accepted {have}/{count} draws for n={n}, m={m}", trials)
        rows = int(min(max(1, MAX_BATCH_CELLS // max(n, 1)), max(16, 1.25 * per_sample * (count - have))))
        rows = min(rows, max_trials - trials)
        values = _draw_tilted(params.lam, n, rows, rng)
        trials += rows
        hits = values[values.sum(axis=1) == target]
        if len(hits):
            hits = hits[: count - have]
            accepted.append(hits)
            have += len(hits)

    codes = np.concatenate(accepted)
    if params.reflected:
        codes = np.arange(n, dtype=np.int64) - codes
    return codes[:, :keep]


def sample_perm_tilted(n: int, m: int, rng: RngStream, max_trials: Optional[int] = None) -> Permutation:
    codes = sample_codes_tilted(n, m, 1, rng, max_trials=max_trials)
    p = from_inv_sequence(tuple(int(e) for e in codes[0]))
    if __debug__:
        assert inv_count(p) == m
    return p


# ---------------------------------------------------------------------------


def resolve_method(n: int, m: int, method: str, exact_budget: int = qcount.EXACT_CELL_BUDGET) -> str:
    if method not in SAMPLER_METHODS:
        raise DomainError(f"unknown sampler {method!r}; expected one of {', '.join(SAMPLER_METHODS)}")
    if method == "auto":
        return "dp" if dp_is_exact(n, m, exact_budget) else "tilted"
    return method


def is_exactly_uniform(n: int, m: int, method: str, exact_budget: int = qcount.EXACT_CELL_BUDGET) -> bool:
    method = resolve_method(n, m, method, exact_budget)
    return method == "tilted" or dp_is_exact(n, m, exact_budget)


def sample_codes(
    n: int,
    m: int,
    count: int,
    rng: RngStream,
    method: str = "auto",
    keep: Optional[int] = None,
    exact_budget: int = qcount.EXACT_CELL_BUDGET,
) -> np.ndarray:
    method = resolve_method(n, m, method, exact_budget)
    if method == "dp":
        return sample_codes_dp(n, m, count, rng, keep, exact_budget)
    return sample_codes_tilted(n, m, count, rng, keep)


def sample_perms(
    n: int,
    m: int,
    count: int,
    rng: RngStream,
    method: str = "auto",
    exact_budget: int = qcount.EXACT_CELL_BUDGET,
) -> List[Permutation]:
    codes = sample_codes(n, m, count, rng, method, exact_budget=exact_budget)
    return [from_inv_sequence(tuple(int(e) for e in row)) for row in codes]


def sample_weak_composition(t: int, s: int, rng: RngStream) -> List[int]:
    """Uniform weak t-composition of s: a uniform (t-1)-subset of s+t-1 bar slots."""
    if t < 1 or s < 0:
        raise DomainError("need t >= 1 and s >= 0")
    bars = np.sort(rng.generator.choice(s + t - 1, size=t - 1, replace=False)) if t > 1 else np.empty(0, dtype=np.int64)
    edges = np.concatenate(([-1], bars, [s + t - 1]))
    return [int(x) for x in np.diff(edges) - 1]


def density_target(k: int, rho: float) -> int:
    # round half to even
    return int(round(rho * qcount.max_inversions(k)))


def sample_pattern_with_density(k: int, rho: float, rng: RngStream) -> Permutation:
    if k < 2 or not 0 <= rho <= 1:
        raise DomainError("need k >= 2 and 0 <= rho <= 1")
    return sample_perm_dp(k, density_target(k, rho), rng)


def sample_uniform_inv_counts(k: int, count: int, rng: RngStream) -> np.ndarray:
    """inv of `count` uniform k-permutations: sums of independent Unif{0..j-1}."""
    if k < 1:
        raise DomainError("k must be >= 1")
    highs = np.arange(1, k + 1, dtype=np.int64)
    rows = max(1, MAX_BATCH_CELLS // k)
    out = np.empty(count, dtype=np.int64)
    for start in range(0, count, rows):
        size = min(rows, count - start)
        out[start : start + size] = rng.integers(0, highs, size=(size, k)).sum(axis=1)
    return out
