import math
from fractions import Fraction
from itertools import permutations

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given
from pydantic import ValidationError

from lib.invperm import qcount
from lib.invperm.errors import BudgetExceededError, DomainError, EmptyClassError
from lib.invperm.permcore import Permutation, inv_count, parse_permutation


def test_mahonian_examples():
    assert qcount.mahonian(4, 2) == 5
    assert qcount.mahonian(9, 0) == 1
    assert qcount.mahonian(9, 36) == 1
    assert qcount.mahonian(4, 7) == 0
    assert qcount.mahonian(4, -1) == 0
    assert list(qcount.mahonian_row(4)) == [1, 3, 5, 6, 5, 3, 1]
    assert qcount.mahonian_row(4).total() == 24


def test_mahonian_brute_force(oracle):
    for n in range(7):
        for m in range(qcount.max_inversions(n) + 1):
            assert qcount.mahonian(n, m) == len(oracle.cls(n, m))


def test_capacity_poly():
    row = qcount.capacity_poly([1, 2], 4)
    assert list(row) == [1, 2, 2, 1, 0]
    assert row[7] == 0 and row[-1] == 0
    with pytest.raises(DomainError):
        qcount.capacity_poly([-1], 3)
    with pytest.raises(DomainError):
        qcount.capacity_poly([1], -1)


def test_composition_counts():
    assert qcount.weak_comp_count(3, 2) == 6
    assert qcount.weak_comp_count(0, 0) == 1
    assert qcount.weak_comp_count(0, 3) == 0
    assert qcount.restricted_comp_count(2, 3, 2) == 0
    assert qcount.restricted_comp_count(3, 3, 2) == 1
    assert qcount.restricted_comp_count(3, 2, 5) == 6
    assert qcount.inv_suffix_count(2, 2, 1) == 2
    assert qcount.inv_suffix_count(0, 0, 3) == 1
    assert qcount.inv_suffix_count(3, -1, 0) == 0


@given(st.integers(1, 5), st.integers(0, 12), st.integers(1, 6))
def test_restricted_matches_enumeration(t, s, r):
    import itertools

    brute = sum(1 for c in itertools.product(range(r), repeat=t) if sum(c) == s)
    assert qcount.restricted_comp_count(t, s, r) == brute


def test_prefix_and_gap_examples():
    assert qcount.prefix_count(4, 2, 2, 1) == 2
    assert qcount.gap_counts(4, 2, 1) == (3, 2)
    assert qcount.gap_counts(4, 2, 2) == (3, 2)
    assert qcount.exact_pattern_prob(4, 2, parse_permutation("21")).fraction == Fraction(2, 5)
    assert qcount.exact_pattern_prob(7, 5, Permutation((1,))).fraction == 1


def test_prefix_and_gap_brute_force(oracle):
    for n in range(1, 7):
        for m in range(qcount.max_inversions(n) + 1):
            members = oracle.cls(n, m)
            for k in range(1, min(4, n) + 1):
                for tau in permutations(range(1, k + 1)):
                    observed = sum(1 for p in members if oracle.standardize(p[:k]) == tau)
                    assert qcount.prefix_count(n, m, k, oracle.inv(tau)) == observed
            for k in range(1, n):
                down = sum(1 for p in members if p[0] > p[k])
                assert qcount.gap_counts(n, m, k) == (len(members) - down, down)
                assert qcount.exact_gap_prob(n, m, k).fraction == Fraction(down, len(members))


def test_structural_identities():
    for n in range(9):
        top = qcount.max_inversions(n)
        row = qcount.mahonian_row(n)
        for k in range(n + 1):
            small = qcount.mahonian_row(k)
            for m in range(top + 1):
                total = sum(small[ell] * qcount.prefix_count(n, m, k, ell) for ell in range(len(small)))
                assert total == row[m]
        for k in range(1, n):
            for m in range(top + 1):
                assert sum(qcount.gap_counts(n, m, k)) == row[m]


def test_domain_errors():
    with pytest.raises(DomainError):
        qcount.prefix_count(2, 0, 3, 0)
    with pytest.raises(DomainError):
        qcount.prefix_count(4, 2, 2, 2)
    with pytest.raises(DomainError):
        qcount.gap_counts(4, 2, 0)
    with pytest.raises(DomainError):
        qcount.gap_counts(4, 2, 4)
    with pytest.raises(EmptyClassError):
        qcount.exact_gap_prob(4, 7, 1)
    with pytest.raises(EmptyClassError):
        qcount.exact_pattern_prob(3, 4, parse_permutation("12"))
    with pytest.raises(DomainError):
        qcount.exact_pattern_prob(2, 1, parse_permutation("123"))


def test_budget():
    qcount.check_budget(10, 10, budget=100)
    with pytest.raises(BudgetExceededError) as info:
        qcount.check_budget(10, 11, budget=100)
    assert info.value.limit == 100
    assert "100" in str(info.value)


def test_exact_probability():
    p = qcount.ExactProbability.from_counts(2, 4)
    assert (p.num, p.den, p.approx) == (1, 2, 0.5)
    assert p.to_dict() == {"num": "1", "den": "2", "approx": 0.5}
    assert str(qcount.ExactProbability.from_counts(2, 5)) == "num=2 den=5 approx=0.4"
    with pytest.raises(EmptyClassError):
        qcount.ExactProbability.from_counts(0, 0)


def test_log_space_rows_track_exact_rows():
    n, m = 40, 300
    exact = qcount.capacity_poly(range(n), m)
    logs = qcount.log_capacity_poly(range(n), m)
    expected = np.log(np.array([float(c) for c in exact]))
    assert np.allclose(logs, expected, rtol=1e-10, atol=1e-9)
    assert qcount.log_mahonian(n, m) == pytest.approx(math.log(qcount.mahonian(n, m)), rel=1e-12)
    assert qcount.log_mahonian(3, 4) == -np.inf


def test_log_row_keeps_zeros():
    logs = qcount.log_capacity_poly([1, 1], 4)
    assert np.isneginf(logs[3]) and np.isneginf(logs[4])
    assert logs[1] == pytest.approx(math.log(2))


def test_approx_gap_prob_matches_exact():
    for n, m, k in [(12, 20, 3), (30, 100, 5), (60, 400, 10)]:
        assert qcount.approx_gap_prob(n, m, k) == pytest.approx(qcount.exact_gap_prob(n, m, k).approx, rel=1e-9)


def test_tripartition_sums():
    direct = qcount.prefix_count(10, 8, 3, 1)
    for r in range(3, 11):
        assert qcount.prefix_count_tripartition(10, 8, 3, 1, r) == direct
    for n, m, k in [(8, 9, 2), (12, 20, 3), (15, 30, 4)]:
        expected = qcount.gap_counts(n, m, k)
        for r in range(k + 1, n + 1):
            assert qcount.gap_counts_tripartition(n, m, k, r) == expected
    with pytest.raises(DomainError):
        qcount.prefix_count_tripartition(10, 8, 3, 1, 2)
    with pytest.raises(DomainError):
        qcount.gap_counts_tripartition(10, 8, 3, 3)


def test_count_dispatch():
    q = qcount.CountQuery(n=4, m=2, k=1)
    assert qcount.count("mahonian", q) == 5
    assert qcount.count("gap", q) == (3, 2)
    assert qcount.count("weakcomp", qcount.CountQuery(t=3, s=2)) == 6
    with pytest.raises(DomainError):
        qcount.count("prefix", q)
    with pytest.raises(DomainError):
        qcount.count("bogus", q)
    with pytest.raises(ValidationError):
        qcount.CountQuery(n=-1)


def test_coefficient_vector_shape():
    with pytest.raises(DomainError):
        qcount.CoefficientVector((1, 2), 3)
    assert inv_count(Permutation((2, 1))) == 1
