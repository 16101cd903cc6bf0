import math
from types import SimpleNamespace

import numpy as np
import pytest

from mirror_select.linalg import Dataset, SplitIndex
from mirror_select.mirror import (
    Contrast,
    MirrorVector,
    ds_select,
    fdp_hat,
    fit_split,
    mirror_statistic,
    mirror_statistics,
    normal_means_ds,
    normal_means_mirror,
    select,
    select_cutoff,
)
from mirror_select.regress import LassoFit
from mirror_select.rng import make_rng


def sparse_linear(seed: int, n: int = 200, p: int = 20) -> Dataset:
    rng = make_rng(seed)
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:3] = [2.0, -2.0, 1.5]
    return Dataset.from_arrays(x, x @ beta + rng.standard_normal(n))


def test_mirror_statistic_examples():
    assert mirror_statistic(1, 2, Contrast.SUM) == 3
    assert mirror_statistic(1, -2, Contrast.SUM) == -3
    assert mirror_statistic(1, 2, Contrast.MIN2) == 2
    assert mirror_statistic(1, 2, Contrast.PRODUCT) == 2
    assert mirror_statistic(0, 5, Contrast.SUM) == 0
    assert mirror_statistic(-1, -2, Contrast.SUM) == 3


def test_vectorized_statistics_agree_with_scalar():
    rng = make_rng(1)
    b1, b2 = rng.standard_normal(30), rng.standard_normal(30)
    b1[:5] = 0.0
    for contrast in Contrast:
        expected = [mirror_statistic(u, v, contrast) for u, v in zip(b1, b2)]
        assert np.allclose(mirror_statistics(b1, b2, contrast), expected)


def test_contrast_is_monotone_in_magnitudes():
    for contrast in Contrast:
        base = mirror_statistic(0.5, 0.8, contrast)
        assert mirror_statistic(0.9, 0.8, contrast) >= base
        assert mirror_statistic(0.5, 1.4, contrast) >= base
        assert mirror_statistic(-0.9, -0.8, contrast) >= mirror_statistic(-0.5, -0.8, contrast)


def test_sum_contrast_is_scale_equivariant():
    for c in (0.1, 2.0, 37.5):
        assert mirror_statistic(c * 1.3, c * -0.4, Contrast.SUM) == pytest.approx(
            c * mirror_statistic(1.3, -0.4, Contrast.SUM)
        )


def test_fdp_hat_examples():
    assert fdp_hat(np.array([3, 2, -1, -2, 0.5]), 1.5) == 0.5
    assert fdp_hat(np.array([1.0, 2.0, 3.0]), 0.1) == 0.0
    assert fdp_hat(np.array([-1.0, -2.0]), 0.5) == 2.0
    with pytest.raises(ValueError):
        fdp_hat(np.array([1.0]), 0.0)


def test_select_cutoff_examples():
    m = np.array([5.0, 4.0, 3.0, -1.0])
    tau, fdp = select_cutoff(m, 0.34)
    assert tau == 1.0 and fdp == 0.0
    assert np.array_equal(np.flatnonzero(m > tau), [0, 1, 2])

    # Every candidate below 3 has a negative tail; at t = 3 both tails are empty.
    m = np.array([-3.0, -2.0, 1.0])
    tau, fdp = select_cutoff(m, 0.1)
    assert tau == 3.0
    assert np.flatnonzero(m > tau).size == 0

    m = np.array([0.7, 2.0, 1.1, 4.0])
    tau, _ = select_cutoff(m, 0.2)
    assert tau == 0.7
    assert np.array_equal(np.flatnonzero(m > tau), [1, 2, 3])


def test_all_zero_statistics_give_infinite_cutoff():
    tau, fdp = select_cutoff(np.zeros(5), 0.1)
    assert math.isinf(tau)
    assert fdp == 0.0


def test_cutoff_is_the_first_feasible_candidate():
    rng = make_rng(2)
    for _ in range(50):
        m = rng.standard_normal(40) + 0.8
        tau, fdp = select_cutoff(m, 0.2)
        assert fdp_hat(m, tau) <= 0.2
        smaller = np.unique(np.abs(m))
        for t in smaller[smaller < tau]:
            assert fdp_hat(m, t) > 0.2


def test_select_cutoff_matches_grid_oracle():
    rng = make_rng(3)
    for trial in range(40):
        size = int(rng.integers(1, 51))
        m = rng.standard_normal(size) + rng.uniform(-0.5, 2.0)
        m[rng.random(size) < 0.2] = 0.0
        q = float(rng.uniform(0.05, 0.5))
        candidates = np.unique(np.abs(m[m != 0]))
        if candidates.size == 0:
            continue
        grid = np.union1d(np.linspace(0, candidates.max(), 10_001)[1:], candidates)
        grid = grid[grid >= candidates.min()]
        negatives = (m[None, :] < -grid[:, None]).sum(axis=1)
        positives = (m[None, :] > grid[:, None]).sum(axis=1)
        feasible = grid[negatives / np.maximum(positives, 1) <= q]
        oracle = np.flatnonzero(m > feasible[0])

        tau, _ = select_cutoff(m, q)
        assert np.array_equal(np.flatnonzero(m > tau), oracle), trial


def test_selection_is_invariant_to_rescaling():
    rng = make_rng(4)
    m = rng.standard_normal(60) + 1.0
    tau, _ = select_cutoff(m, 0.1)
    for c in (0.01, 3.0, 1e4):
        scaled, _ = select_cutoff(c * m, 0.1)
        assert np.array_equal(np.flatnonzero(m > tau), np.flatnonzero(c * m > scaled))


def test_select_never_picks_non_positive_statistics():
    m = np.array([4.0, 0.0, -0.5, 2.0, 0.3, -0.1])
    result = select(MirrorVector(m, Contrast.SUM), 0.5)
    assert np.all(m[result.selected] > 0)
    assert result.n_selected == len(result.selected)


def test_normal_means_mirror_examples():
    assert normal_means_mirror(1.0, 1.0) == 2.0
    assert normal_means_mirror(1.0, -1.0) == -2.0
    assert normal_means_mirror(0.0, 3.7) == 0.0
    assert normal_means_mirror(0.0, -3.7) == 0.0


def test_normal_means_ds_finds_strong_means():
    rng = make_rng(5)
    mu = np.zeros(200)
    mu[:20] = 1.0
    x = mu + rng.standard_normal((100, 200))
    result = normal_means_ds(x, 0.1, make_rng(6))
    hits = np.intersect1d(result.selected, np.arange(20))
    assert len(hits) >= 18
    assert (result.n_selected - len(hits)) / max(result.n_selected, 1) <= 0.25
    again = normal_means_ds(x, 0.1, make_rng(6))
    assert np.array_equal(result.selected, again.selected)


def test_ds_select_is_deterministic_given_seed():
    data = sparse_linear(7)
    a = ds_select(data, 0.1, Contrast.SUM, make_rng(8), 5)
    b = ds_select(data, 0.1, Contrast.SUM, make_rng(8), 5)
    assert np.array_equal(a.selected, b.selected)
    assert a.tau == b.tau
    assert np.array_equal(a.mirror.m, b.mirror.m)


def test_ds_select_recovers_strong_signals():
    data = sparse_linear(9)
    result = ds_select(data, 0.1, Contrast.SUM, make_rng(10), 5)
    assert len(set(result.selected.tolist()) & {0, 1, 2}) >= 2
    # Unscreened features carry a zero statistic.
    outside = np.setdiff1d(np.arange(data.p), result.mirror.split_fit.support)
    assert np.all(result.mirror.m[outside] == 0)


def test_ds_select_with_empty_screen(monkeypatch):
    data = sparse_linear(11)

    def no_support(first, *args, **kwargs):
        return LassoFit(np.zeros(first.p), 1.0, np.zeros(0, dtype=int), 1, True)

    monkeypatch.setattr("mirror_select.mirror.lasso_cv", no_support)
    result = ds_select(data, 0.1, Contrast.SUM, make_rng(12), 5)
    assert math.isinf(result.tau)
    assert result.n_selected == 0
    assert result.diagnostics["empty_screen"]


def test_wide_screen_is_truncated_to_quarter_of_rows(monkeypatch):
    rng = make_rng(13)
    data = Dataset.from_arrays(rng.standard_normal((16, 10)), rng.standard_normal(16))
    beta = np.array([0.1, 0.9, 0.3, 0.8, 0.2, 0.7, 0.05, 0.6, 0.4, 0.5])

    def everything(first, *args, **kwargs):
        return LassoFit(beta.copy(), 0.01, np.arange(10), 3, True)

    monkeypatch.setattr("mirror_select.mirror.lasso_cv", everything)
    split = SplitIndex(np.arange(8), np.arange(8, 16), 16)
    split_fit, notes = fit_split(data, split, make_rng(14))
    assert notes["truncated_to"] == 4
    assert np.array_equal(split_fit.support, [1, 3, 5, 7])
    assert np.all(split_fit.beta2[[0, 2, 4, 6, 8, 9]] == 0)


def test_mirror_vector_rejects_statistics_off_support():
    split_fit = SimpleNamespace(support=np.array([0, 1]))
    with pytest.raises(ValueError):
        MirrorVector(np.array([1.0, -1.0, 0.5]), Contrast.SUM, split_fit)
