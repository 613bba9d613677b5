"""
Permutations with one-based positions and values, their inversion
statistics, the inversion-sequence bijection and consecutive patterns.

The inversion sequence of p is e_j = |{i < j : p(i) > p(j)}|, so e_j < j
and sum(e) = inv(p). The relative order of any prefix p[1, L] depends
only on e_1..e_L, which is what the batch helpers at the bottom exploit.
"""
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import *

import numpy as np

from .errors import DomainError, InvalidCodeError, WindowRangeError

PAIR_SCAN_MAX_N = 64


@dataclass(frozen=True)
class Permutation:
    values: Tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if sorted(values) != list(range(1, len(values) + 1)):
            raise DomainError(f"not a permutation of 1..{len(values)}: {values}")

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j: int) -> int:
        # one-based
        if not 1 <= j <= len(self.values):
            raise WindowRangeError(f"position {j} outside 1..{len(self.values)}")
        return self.values[j - 1]

    def __iter__(self):
        return iter(self.values)

    def __str__(self):
        return format_permutation(self)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def reverse(cls, n: int) -> "Permutation":
        return cls(tuple(range(n, 0, -1)))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        return parse_permutation(text)


@dataclass(frozen=True)
class InversionSequence:
    terms: Tuple[int, ...]

    def __post_init__(self):
        terms = tuple(int(e) for e in self.terms)
        object.__setattr__(self, "terms", terms)
        for j, e in enumerate(terms, start=1):
            if not 0 <= e < j:
                raise InvalidCodeError(f"term e_{j} = {e} violates 0 <= e_j < {j}")

    @property
    def n(self) -> int:
        return len(self.terms)

    @property
    def total(self) -> int:
        return sum(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


class _Fenwick:
    # counts over values 1..size
    def __init__(self, size: int):
        self.size = size
        self.tree = [0] * (size + 1)

    def add(self, i: int, delta: int = 1):
        while i <= self.size:
            self.tree[i] += delta
            i += i & -i

    def prefix(self, i: int) -> int:
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & -i
        return total

    def kth(self, k: int) -> int:
        """Smallest i with prefix(i) >= k."""
        pos = 0
        step = 1 << self.size.bit_length()
        while step:
            nxt = pos + step
            if nxt <= self.size and self.tree[nxt] < k:
                pos = nxt
                k -= self.tree[nxt]
            step >>= 1
        return pos + 1


def parse_permutation(text: str) -> Permutation:
    """
    Whitespace- or comma-separated one-based values, or a compact digit word
    such as "2341" for lengths up to 9.
    """
    text = text.strip()
    if not text:
        raise DomainError("empty permutation text")
    if re.fullmatch(r"[1-9]+", text) and len(text) <= 9:
        return Permutation(tuple(int(c) for c in text))
    tokens = [t for t in re.split(r"[\s,]+", text) if t]
    try:
        return Permutation(tuple(int(t) for t in tokens))
    except ValueError as e:
        if isinstance(e, DomainError):
            raise
        raise DomainError(f"cannot parse permutation from {text!r}")


def format_permutation(p: Permutation, compact: bool = False) -> str:
    if compact and p.n <= 9:
        return "".join(str(v) for v in p.values)
    return " ".join(str(v) for v in p.values)


def inv_count_pairs(p: Permutation) -> int:
    v = p.values
    return sum(1 for i in range(len(v)) for j in range(i + 1, len(v)) if v[i] > v[j])


def inv_count_fenwick(p: Permutation) -> int:
    tree = _Fenwick(p.n)
    total = 0
    for seen, value in enumerate(p.values):
        total += seen - tree.prefix(value)
        tree.add(value)
    return total


def inv_count(p: Permutation) -> int:
    if p.n > PAIR_SCAN_MAX_N:
        return inv_count_fenwick(p)
    return inv_count_pairs(p)


def inv_density(p: Permutation) -> Fraction:
    if p.n < 2:
        raise DomainError("inversion density needs n >= 2")
    return Fraction(inv_count(p), p.n * (p.n - 1) // 2)


def total_displacement(p: Permutation) -> int:
    return sum(abs(v - j) for j, v in enumerate(p.values, start=1))


def descents(p: Permutation) -> int:
    v = p.values
    return sum(1 for i in range(len(v) - 1) if v[i] > v[i + 1])


def adjacent_descent_fraction(p: Permutation) -> float:
    if p.n < 2:
        raise DomainError("descent fraction needs n >= 2")
    return descents(p) / (p.n - 1)


def to_inv_sequence(p: Permutation) -> InversionSequence:
    tree = _Fenwick(p.n)
    terms = []
    for seen, value in enumerate(p.values):
        terms.append(seen - tree.prefix(value))
        tree.add(value)
    return InversionSequence(tuple(terms))


def from_inv_sequence(s: Union[InversionSequence, Sequence[int]]) -> Permutation:
    if not isinstance(s, InversionSequence):
        s = InversionSequence(tuple(s))
    n = s.n
    tree = _Fenwick(n)
    for v in range(1, n + 1):
        tree.add(v)
    values = [0] * n
    # right to left: p(j) is the (j - e_j)-th smallest value not yet placed
    for j in range(n, 0, -1):
        value = tree.kth(j - s.terms[j - 1])
        values[j - 1] = value
        tree.add(value, -1)
    return Permutation(tuple(values))


def psi_shift(p: Permutation) -> Permutation:
    """
    Drop the last point and adjoin a new first point n+1-p(n), shifting the
    values in between so the inversion count is unchanged. A pattern at
    position j <= n-k moves to position j+1.
    """
    n = p.n
    if n < 1:
        raise DomainError("psi_shift needs n >= 1")
    if n == 1:
        return p
    last = p.values[-1]
    first = n + 1 - last
    shifted = [first]
    for v in p.values[:-1]:
        if first <= v < last:
            shifted.append(v + 1)
        elif last < v <= first:
            shifted.append(v - 1)
        else:
            shifted.append(v)
    return Permutation(tuple(shifted))


def psi_unshift(p: Permutation) -> Permutation:
    n = p.n
    if n < 1:
        raise DomainError("psi_unshift needs n >= 1")
    if n == 1:
        return p
    first = p.values[0]
    last = n + 1 - first
    restored = []
    for v in p.values[1:]:
        if first < v <= last:
            restored.append(v - 1)
        elif last <= v < first:
            restored.append(v + 1)
        else:
            restored.append(v)
    restored.append(last)
    return Permutation(tuple(restored))


def psi_power(p: Permutation, t: int) -> Permutation:
    step = psi_shift if t >= 0 else psi_unshift
    for _ in range(abs(t)):
        p = step(p)
    return p


def standardize(values: Sequence[int]) -> Permutation:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0] * len(values)
    for rank, i in enumerate(order, start=1):
        ranks[i] = rank
    return Permutation(tuple(ranks))


def window_pattern(p: Permutation, j: int, k: int) -> Permutation:
    if k < 1 or j < 1 or j + k - 1 > p.n:
        raise WindowRangeError(f"window [{j}, {j + k - 1}] outside 1..{p.n}")
    return standardize(p.values[j - 1 : j + k - 1])


def occurs_at(tau: Permutation, p: Permutation, j: int) -> bool:
    return window_pattern(p, j, tau.n) == tau


# ---------------------------------------------------------------------------
# batch helpers over inversion-sequence prefixes (rows of a 2-d int array,
# column c holding e_{c+1})


def _check_window(codes: np.ndarray, j: int, k: int):
    if k < 1 or j < 1 or j + k - 1 > codes.shape[1]:
        raise WindowRangeError(
            f"window [{j}, {j + k - 1}] needs code prefixes of length {j + k - 1}, got {codes.shape[1]}"
        )


def code_window_ranks(codes: np.ndarray, j: int, k: int) -> np.ndarray:
    """
    Standardised window p[j, j+k-1] for every row; returns a (count, k)
    array of ranks 1..k.
    """
    codes = np.asarray(codes)
    _check_window(codes, j, k)
    count = codes.shape[0]
    # rank of each window point among the first i points, updated as points arrive
    ranks = np.zeros((count, k), dtype=np.int64)
    for c in range(k):
        i = j + c
        new = i - codes[:, i - 1].astype(np.int64)
        if c:
            ranks[:, :c] += ranks[:, :c] >= new[:, None]
        ranks[:, c] = new
    return np.argsort(np.argsort(ranks, axis=1, kind="stable"), axis=1, kind="stable") + 1


def code_gap_inversions(codes: np.ndarray, j: int, k: int) -> np.ndarray:
    """Boolean vector: p(j) > p(j+k) for every row."""
    codes = np.asarray(codes)
    _check_window(codes, j, k + 1)
    rank = j - codes[:, j - 1].astype(np.int64)
    for i in range(j + 1, j + k):
        rank += (i - codes[:, i - 1].astype(np.int64)) <= rank
    return (j + k - codes[:, j + k - 1].astype(np.int64)) <= rank


def code_descent_fraction(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes)
    if codes.shape[1] < 2:
        raise DomainError("descent fraction needs n >= 2")
    return (np.diff(codes.astype(np.int64), axis=1) > 0).mean(axis=1)


def codes_to_permutations(codes: np.ndarray) -> List[Permutation]:
    return [from_inv_sequence(tuple(int(e) for e in row)) for row in np.asarray(codes)]
