import math

import numpy as np
import pytest

from lib.invperm import qcount, sampler, stats
from lib.invperm.errors import DomainError, TrialsExhaustedError
from lib.invperm.permcore import Permutation, inv_count
from lib.invperm.rng import RngStream

SIGNIFICANCE = 1e-4


def _uniformity_p_value(codes, cells):
    _, counts = np.unique(codes, axis=0, return_counts=True)
    observed = np.concatenate([counts, np.zeros(cells - len(counts))])
    return stats.chi_square(observed, np.full(cells, len(codes) / cells)).p_value


def test_table_rows_match_exact_counts():
    table = sampler.MahonianTable(12, 30)
    for j in range(13):
        assert list(table.row(j)) == list(qcount.mahonian_row(j, 30))
    assert table.class_size == qcount.mahonian(12, 30)
    with pytest.raises(DomainError):
        table.row(13)


def test_log_table_rows():
    exact = sampler.MahonianTable(15, 40)
    logs = sampler.MahonianTable(15, 40, exact=False)
    for j in (0, 3, 7, 15):
        with np.errstate(divide="ignore"):
            expected = np.log(np.array([float(c) for c in exact.row(j)]))
        assert np.allclose(logs.row(j), expected, rtol=1e-10, equal_nan=False)
    with pytest.raises(DomainError):
        logs.class_size


@pytest.mark.parametrize("exact", [True, False])
def test_dp_codes_are_valid(exact):
    table = sampler.MahonianTable(20, 60, exact=exact)
    codes = table.draw_codes(500, RngStream(1))
    assert codes.shape == (500, 20)
    assert (codes.sum(axis=1) == 60).all()
    assert (codes < np.arange(1, 21)).all() and (codes >= 0).all()


def test_dp_uniform_on_small_class():
    codes = sampler.sample_codes(5, 4, 30_000, RngStream(2), "dp")
    assert _uniformity_p_value(codes, qcount.mahonian(5, 4)) > SIGNIFICANCE


@pytest.mark.parametrize("method", ["dp", "tilted"])
@pytest.mark.parametrize("n", range(1, 7))
def test_uniform_on_every_small_class(n, method):
    for m in range(qcount.max_inversions(n) + 1):
        cells = qcount.mahonian(n, m)
        codes = sampler.sample_codes(n, m, 300 * cells, RngStream(100 * n + m), method)
        assert (codes.sum(axis=1) == m).all()
        assert len(np.unique(codes, axis=0)) == cells
        # about 80 classes in the grid
        assert _uniformity_p_value(codes, cells) > SIGNIFICANCE / 100, (n, m)


def test_log_dp_uniform_on_small_class():
    codes = sampler.MahonianTable(5, 4, exact=False).draw_codes(30_000, RngStream(3))
    assert _uniformity_p_value(codes, qcount.mahonian(5, 4)) > SIGNIFICANCE


def test_big_integer_path_marginal():
    # counts here overflow int64, so the per-sample big-integer path runs
    n, m = 30, 100
    table = sampler.MahonianTable(n, m)
    assert not table.int64
    codes = table.draw_codes(4000, RngStream(4))
    assert (codes.sum(axis=1) == m).all()
    last = codes[:, -1]
    total = qcount.mahonian(n, m)
    expected = np.array([qcount.mahonian(n - 1, m - v) / total * len(last) for v in range(n)])
    observed = np.bincount(last, minlength=n)
    # sparse tail cells lumped into one
    cut = int(np.argmax(expected < 5))
    expected = np.append(expected[:cut], expected[cut:].sum())
    observed = np.append(observed[:cut], observed[cut:].sum())
    assert stats.chi_square(observed, expected).p_value > SIGNIFICANCE


def test_keep_truncates_without_changing_the_draw():
    full = sampler.sample_codes(12, 20, 200, RngStream(5), "dp")
    head = sampler.sample_codes(12, 20, 200, RngStream(5), "dp", keep=4)
    assert head.shape == (200, 4)
    assert (head == full[:, :4]).all()


def test_dp_permutations():
    rng = RngStream(6)
    assert sampler.sample_perm_dp(2, 1, rng).values == (2, 1)
    assert sampler.sample_perm_dp(10, 0, rng) == Permutation.identity(10)
    assert sampler.sample_perm_dp(6, 15, rng) == Permutation.reverse(6)
    p = sampler.sample_perm_dp(50, 300, rng)
    assert inv_count(p) == 300
    with pytest.raises(DomainError):
        sampler.sample_perm_dp(4, 7, rng)


def test_solve_tilt():
    params = sampler.solve_tilt(50, 200)
    assert 0 < params.q < 1 and not params.reflected
    assert abs(params.residual) <= 1e-9 * 200
    assert sampler.tilted_mean(50, params.q) == pytest.approx(200, rel=1e-9)

    mirrored = sampler.solve_tilt(50, qcount.max_inversions(50) - 200)
    assert mirrored.reflected
    assert mirrored.q == pytest.approx(params.q)

    half = sampler.solve_tilt(5, 5)
    assert half.q == 1.0 and half.lam == 0.0

    for bad in (0, qcount.max_inversions(5)):
        with pytest.raises(DomainError):
            sampler.solve_tilt(5, bad)


def test_tilted_mean_increases_with_q():
    means = [sampler.tilted_mean(30, q) for q in (0.2, 0.5, 0.8, 0.99)]
    assert means == sorted(means)
    assert sampler.tilted_mean(30, 1.0) == pytest.approx(qcount.max_inversions(30) / 2)


@pytest.mark.parametrize("m", [3, 7])
def test_tilted_uniform_on_small_class(m):
    codes = sampler.sample_codes(5, m, 30_000, RngStream(7), "tilted")
    assert (codes.sum(axis=1) == m).all()
    assert _uniformity_p_value(codes, qcount.mahonian(5, m)) > SIGNIFICANCE


def test_tilted_extremes_and_budget():
    rng = RngStream(8)
    assert sampler.sample_perm_tilted(2, 1, rng).values == (2, 1)
    assert sampler.sample_perm_tilted(7, 0, rng) == Permutation.identity(7)
    assert inv_count(sampler.sample_perm_tilted(40, 250, rng)) == 250
    with pytest.raises(TrialsExhaustedError) as info:
        sampler.sample_codes_tilted(30, 100, 10, rng, max_trials=1)
    assert info.value.trials == 1


def test_tilted_acceptance_scale():
    untilted = math.sqrt(sum((j * j - 1) / 12 for j in range(1, 101)))
    assert sampler.tilted_total_sd(100, qcount.max_inversions(100) // 2) == pytest.approx(untilted)
    assert 0 < sampler.tilted_total_sd(100, 1000) < math.inf


@pytest.mark.slow
def test_tilted_acceptance_rate():
    n, m = 1000, 31623
    params = sampler.solve_tilt(n, m)
    predicted = 1 / (sampler.tilted_total_sd(n, m) * math.sqrt(2 * math.pi))
    rng = RngStream(21)
    trials = hits = 0
    for _ in range(10):
        values = sampler._draw_tilted(params.lam, n, 10_000, rng)
        hits += int((values.sum(axis=1) == m).sum())
        trials += len(values)
    rate = hits / trials
    assert predicted / 3 < rate < 3 * predicted


def test_method_resolution():
    assert sampler.resolve_method(10, 10, "auto") == "dp"
    assert sampler.resolve_method(10, 10, "auto", exact_budget=50) == "tilted"
    assert sampler.is_exactly_uniform(10, 10, "dp", exact_budget=50) is False
    assert sampler.is_exactly_uniform(10, 10, "tilted", exact_budget=50) is True
    with pytest.raises(DomainError):
        sampler.resolve_method(10, 10, "gibbs")


def test_sample_perms_shapes():
    perms = sampler.sample_perms(8, 10, 5, RngStream(9))
    assert len(perms) == 5 and all(inv_count(p) == 10 for p in perms)


def test_weak_composition():
    rng = RngStream(10)
    parts = sampler.sample_weak_composition(10_000, 1_000_000, rng)
    assert len(parts) == 10_000 and sum(parts) == 1_000_000 and min(parts) >= 0
    assert sampler.sample_weak_composition(1, 7, rng) == [7]
    assert sampler.sample_weak_composition(4, 0, rng) == [0, 0, 0, 0]
    with pytest.raises(DomainError):
        sampler.sample_weak_composition(0, 3, rng)


def test_weak_composition_uniform():
    rng = RngStream(11)
    draws = [tuple(sampler.sample_weak_composition(3, 2, rng)) for _ in range(12_000)]
    cells = sorted(set(draws))
    assert len(cells) == qcount.weak_comp_count(3, 2)
    observed = [draws.count(c) for c in cells]
    assert stats.chi_square(observed, [len(draws) / len(cells)] * len(cells)).p_value > SIGNIFICANCE


def test_pattern_with_density():
    rng = RngStream(12)
    assert sampler.density_target(4, 0.25) == 2
    assert sampler.density_target(4, 0.75) == 4
    assert inv_count(sampler.sample_pattern_with_density(5, 0.5, rng)) == 5
    assert sampler.sample_pattern_with_density(6, 0.0, rng) == Permutation.identity(6)
    with pytest.raises(DomainError):
        sampler.sample_pattern_with_density(5, 1.5, rng)


def test_uniform_inversion_counts():
    k = 200
    counts = sampler.sample_uniform_inv_counts(k, 5000, RngStream(13))
    assert counts.min() >= 0 and counts.max() <= qcount.max_inversions(k)
    sd = math.sqrt(k * (k - 1) * (2 * k + 5) / 72)
    assert abs(counts.mean() - qcount.max_inversions(k) / 2) < 5 * sd / math.sqrt(5000)
