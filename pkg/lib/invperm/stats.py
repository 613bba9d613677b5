import math
from dataclasses import dataclass
from typing import *

import numpy as np
from scipy import special, stats

from .errors import DomainError


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    merged_cells: int = 0


def _merge_empty_cells(counts: np.ndarray, expected: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    # a cell with zero expectation is folded into its right neighbour
    # (the left one for the last cell)
    counts = list(counts)
    expected = list(expected)
    merged = 0
    i = 0
    while i < len(expected) and len(expected) > 1:
        if expected[i] > 0:
            i += 1
            continue
        target = i + 1 if i + 1 < len(expected) else i - 1
        counts[target] += counts[i]
        expected[target] += expected[i]
        del counts[i], expected[i]
        merged += 1
        if target < i:
            i = target
    return np.asarray(counts, dtype=float), np.asarray(expected, dtype=float), merged


def chi_square(counts: Sequence[float], expected: Sequence[float]) -> ChiSquareResult:
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if counts.shape != expected.shape or counts.size == 0:
        raise DomainError("counts and expected must be nonempty and of equal length")
    if (expected < 0).any() or (counts < 0).any():
        raise DomainError("counts and expected must be nonnegative")
    counts, expected, merged = _merge_empty_cells(counts, expected)
    if not (expected > 0).all():
        raise DomainError("expected counts are all zero")
    statistic = float(((counts - expected) ** 2 / expected).sum())
    dof = len(counts) - 1
    p_value = float(special.gammaincc(dof / 2, statistic / 2)) if dof > 0 else 1.0
    return ChiSquareResult(statistic, dof, p_value, merged)


def tv_distance(dist_a: Sequence[float], dist_b: Sequence[float]) -> float:
    a = np.asarray(dist_a, dtype=float)
    b = np.asarray(dist_b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise DomainError("distributions must be nonempty and of equal length")
    if a.sum() <= 0 or b.sum() <= 0:
        raise DomainError("distributions must have positive mass")
    return float(0.5 * np.abs(a / a.sum() - b / b.sum()).sum())


def wilson_ci(successes: int, trials: int, level: float = 0.95) -> Tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise DomainError("need trials >= 1 and 0 <= successes <= trials")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    z = float(stats.norm.ppf(0.5 + level / 2))
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    return low, high


def standard_error(p: float, trials: int) -> float:
    """Binomial standard error of a frequency under success probability p."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def within_se(estimate: float, reference: float, trials: int, tolerance: float) -> bool:
    return abs(estimate - reference) <= tolerance * standard_error(reference, trials)
