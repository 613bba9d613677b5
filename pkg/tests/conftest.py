import itertools
import os
from types import SimpleNamespace

import hypothesis
import pytest

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=1000, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# brute-force oracles, independent of the library


def all_perms(n):
    return list(itertools.permutations(range(1, n + 1)))


def brute_inv(values):
    return sum(1 for i in range(len(values)) for j in range(i + 1, len(values)) if values[i] > values[j])


def brute_class(n, m):
    return [p for p in all_perms(n) if brute_inv(p) == m]


def brute_standardize(values):
    order = sorted(values)
    return tuple(order.index(v) + 1 for v in values)


def brute_codes(n, m):
    """All inversion sequences of length n summing to m."""
    ranges = [range(j) for j in range(1, n + 1)]
    return [c for c in itertools.product(*ranges) if sum(c) == m]


@pytest.fixture(scope="session")
def oracle():
    return SimpleNamespace(
        all_perms=all_perms,
        inv=brute_inv,
        cls=brute_class,
        standardize=brute_standardize,
        codes=brute_codes,
    )
