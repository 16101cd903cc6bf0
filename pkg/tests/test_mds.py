import numpy as np
import pytest

from mirror_select.errors import NumericalError
from mirror_select.linalg import Dataset
from mirror_select.mds import (
    InclusionRates,
    inclusion_rates_from,
    estimate_inclusion_rates,
    mds_cutoff,
    mds_select,
    normal_means_mds,
    rates_from_selections,
    select_by_rates,
)
from mirror_select.mirror import Contrast, SelectionResult
from mirror_select.rng import make_rng


def as_rates(values) -> InclusionRates:
    values = np.asarray(values, dtype=float)
    return InclusionRates(values, 1, np.array([1]))


def fixed_selector(sets):
    """Selector returning a fixed selected set, chosen by the stream's first draw."""

    def selector(stream):
        k = int(stream.integers(0, len(sets)))
        return SelectionResult(np.asarray(sets[k], dtype=int), 1.0, 0.0)

    return selector


def test_rates_examples():
    rates = rates_from_selections([np.array([0, 1]), np.array([0])], 5)
    assert np.allclose(rates.rates, [0.75, 0.25, 0, 0, 0])
    assert rates.nonempty == 2

    empty = rates_from_selections([np.zeros(0, dtype=int)] * 4, 3)
    assert np.all(empty.rates == 0)


def test_rate_mass_counts_nonempty_replications():
    rng = make_rng(1)
    selections = []
    for _ in range(37):
        size = int(rng.integers(0, 6))
        selections.append(rng.choice(20, size=size, replace=False))
    selections[3] = None
    rates = rates_from_selections(selections, 20)
    nonempty = sum(1 for s in selections if s is not None and len(s))
    assert rates.rates.sum() == pytest.approx(nonempty / 37)
    assert rates.failures == 1


def test_failed_replications_count_as_empty():
    calls = []

    def flaky(stream):
        calls.append(1)
        if len(calls) % 2:
            raise NumericalError("boom")
        return SelectionResult(np.array([2]), 1.0, 0.0)

    rates = inclusion_rates_from(flaky, 4, 6, make_rng(2))
    assert rates.failures == 3
    assert np.allclose(rates.rates, [0, 0, 0.5, 0])


def test_mds_cutoff_examples():
    cutoff, selected = mds_cutoff(as_rates([0.0, 0.02, 0.03, 0.45, 0.5]), 0.1)
    assert cutoff == 0.03
    assert np.array_equal(selected, [3, 4])

    cutoff, selected = mds_cutoff(as_rates(np.zeros(6)), 0.1)
    assert cutoff == 0.0
    assert selected.size == 0

    # Even the smallest rate exceeds q: every positive rate is selected.
    cutoff, selected = mds_cutoff(as_rates([0.5, 0.5]), 0.1)
    assert cutoff == 0.0
    assert np.array_equal(selected, [0, 1])


def test_budget_absorbs_rounding_in_cumulative_sums():
    # 0.1 + 0.2 rounds above 0.3 in binary floating point.
    cutoff, selected = mds_cutoff(np.array([0.1, 0.2, 0.7]), 0.3)
    assert cutoff == 0.2
    assert np.array_equal(selected, [2])


def test_ties_at_cutoff_are_excluded():
    cutoff, selected = mds_cutoff(as_rates([0.04, 0.04, 0.04, 0.88]), 0.1)
    assert cutoff == 0.04
    assert np.array_equal(selected, [3])


def test_budget_and_monotonicity_on_random_rates():
    rng = make_rng(3)
    for _ in range(200):
        p = int(rng.integers(2, 40))
        raw = rng.dirichlet(np.full(p, 0.3)) * rng.uniform(0.2, 1.0)
        q = float(rng.uniform(0.01, 0.3))
        cutoff, selected = mds_cutoff(raw, q)
        ordered = np.sort(raw)
        within = np.flatnonzero(np.cumsum(ordered) <= q + 1e-12)
        if within.size:
            assert np.cumsum(ordered)[within[-1]] <= q + 1e-12
            assert np.all(raw[selected] > cutoff)
        chosen = np.zeros(p, dtype=bool)
        chosen[selected] = True
        for j in np.flatnonzero(chosen):
            assert np.all(chosen[raw > raw[j]])


def test_select_by_rates_reports_diagnostics():
    rates = InclusionRates(np.array([0.0, 0.02, 0.03, 0.45, 0.5]), 10, np.ones(10, dtype=int))
    result = select_by_rates(rates, 0.1)
    assert result.tau == 0.03
    assert result.fdp_hat_at_tau == pytest.approx(0.05)
    assert result.diagnostics["inclusion_rates"] is rates
    assert not result.diagnostics["degenerate_cutoff"]


def test_rates_do_not_depend_on_worker_count():
    selector = fixed_selector([[0, 1], [1], [2, 3, 4], []])
    one = inclusion_rates_from(selector, 6, 40, make_rng(4), n_jobs=1)
    two = inclusion_rates_from(selector, 6, 40, make_rng(4), n_jobs=2)
    assert np.array_equal(one.rates, two.rates)
    assert np.array_equal(one.per_split_sizes, two.per_split_sizes)


def test_mds_select_on_linear_data():
    rng = make_rng(5)
    n, p = 200, 15
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:3] = [2.0, -2.0, 2.0]
    data = Dataset.from_arrays(x, x @ beta + rng.standard_normal(n))
    result = mds_select(data, 0.1, Contrast.SUM, 6, make_rng(6), cv_folds=5, lambda_grid_size=30)
    rates = result.diagnostics["inclusion_rates"]
    assert rates.m == 6
    assert rates.rates[:3].sum() >= 0.6
    again = mds_select(data, 0.1, Contrast.SUM, 6, make_rng(6), cv_folds=5, lambda_grid_size=30)
    assert np.array_equal(result.selected, again.selected)

    direct = estimate_inclusion_rates(
        data, 0.1, Contrast.SUM, 6, make_rng(6), cv_folds=5, lambda_grid_size=30
    )
    assert np.array_equal(direct.rates, rates.rates)
    with pytest.raises(ValueError):
        estimate_inclusion_rates(data, 0.1, Contrast.SUM, 6, None)


def test_normal_means_mds_ranks_signals_first():
    rng = make_rng(7)
    mu = np.zeros(100)
    mu[:10] = 1.0
    x = mu + rng.standard_normal((80, 100))
    result = normal_means_mds(x, 0.1, 20, make_rng(8))
    rates = result.diagnostics["inclusion_rates"].rates
    assert rates[:10].min() > rates[10:].max()
    nulls = np.setdiff1d(result.selected, np.arange(10))
    assert len(nulls) <= 0.2 * max(result.n_selected, 1)
