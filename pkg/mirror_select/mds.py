"""Multiple data splitting: inclusion rates over m DS runs and the budget cutoff."""

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from joblib import Parallel, delayed

from mirror_select.debug import debug_log, debug_warn
from mirror_select.errors import MirrorSelectError
from mirror_select.linalg import Dataset
from mirror_select.mirror import (
    Contrast,
    SelectionResult,
    ds_select,
    normal_means_ds,
)
from mirror_select.rng import Generator, spawn_rngs
from mirror_select.settings import DEFAULT_CV_FOLDS, DEFAULT_GRID_SIZE, DEFAULT_M

# Absorbs rounding in cumulative sums of rates such as 1/3 + 1/3 + 1/3.
BUDGET_SLACK = 1e-12

Selector = Callable[[Generator], SelectionResult]


class Method(str, Enum):
    """Selection procedure. BHQ only applies where exact p-values exist."""

    DS = "ds"
    MDS = "mds"
    BHQ = "bhq"


@dataclass(frozen=True)
class InclusionRates:
    rates: np.ndarray
    m: int
    per_split_sizes: np.ndarray
    failures: int = 0

    @property
    def nonempty(self) -> int:
        return int(np.count_nonzero(self.per_split_sizes))


def _replicate(selector: Selector, rng: Generator, k: int) -> np.ndarray | None:
    try:
        return np.asarray(selector(rng).selected, dtype=int)
    except MirrorSelectError as exc:
        debug_warn("replication failed", replication=k, error=type(exc).__name__, detail=str(exc))
        return None


def rates_from_selections(selections: list[np.ndarray | None], p: int) -> InclusionRates:
    """Average of 1(j in S_k) / max(|S_k|, 1); a failed run (None) counts as empty."""
    m = len(selections)
    if m < 1:
        raise ValueError("need at least one replication")
    totals = np.zeros(p)
    sizes = np.zeros(m, dtype=int)
    failures = 0
    for k, selected in enumerate(selections):
        if selected is None:
            failures += 1
            continue
        sizes[k] = len(selected)
        if len(selected):
            totals[selected] += 1.0 / len(selected)
    return InclusionRates(totals / m, m, sizes, failures)


def inclusion_rates_from(
    selector: Selector,
    p: int,
    m: int,
    rng: Generator,
    *,
    n_jobs: int = 1,
    label: str = "mds",
) -> InclusionRates:
    """Run ``selector`` on m independent substreams and aggregate inclusion rates."""
    if m < 1:
        raise ValueError("m must be at least 1")
    streams = spawn_rngs(rng, label, m)
    selections = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(selector, stream, k) for k, stream in enumerate(streams)
    )
    rates = rates_from_selections(list(selections), p)
    debug_log("inclusion rates", m=m, nonempty=rates.nonempty, failures=rates.failures)
    return rates


def estimate_inclusion_rates(
    data: Dataset,
    q: float,
    contrast: Contrast = Contrast.SUM,
    m: int = DEFAULT_M,
    rng: Generator | None = None,
    *,
    cv_folds: int = DEFAULT_CV_FOLDS,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
    n_jobs: int = 1,
) -> InclusionRates:
    if rng is None:
        raise ValueError("estimate_inclusion_rates needs a seeded random stream")

    def selector(stream: Generator) -> SelectionResult:
        return ds_select(data, q, contrast, stream, cv_folds, lambda_grid_size=lambda_grid_size)

    return inclusion_rates_from(selector, data.p, m, rng, n_jobs=n_jobs)


def mds_cutoff(rates, q: float) -> tuple[float, np.ndarray]:
    """Largest l with I_(1) + ... + I_(l) <= q; select {j : I_j > I_(l)}.

    When even the smallest rate exceeds q, every feature with a positive rate
    is selected and the cutoff reported is 0.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    values = rates.rates if isinstance(rates, InclusionRates) else np.asarray(rates, dtype=float)
    ordered = np.sort(values)
    within = np.flatnonzero(np.cumsum(ordered) <= q + BUDGET_SLACK)
    if within.size == 0:
        debug_warn("degenerate MDS cutoff", smallest_rate=float(ordered[0]), q=q)
        return 0.0, np.flatnonzero(values > 0)
    cutoff = float(ordered[within[-1]])
    return cutoff, np.flatnonzero(values > cutoff)


def select_by_rates(rates: InclusionRates, q: float) -> SelectionResult:
    cutoff, selected = mds_cutoff(rates, q)
    unselected = np.setdiff1d(np.arange(len(rates.rates)), selected)
    return SelectionResult(
        selected=selected,
        tau=cutoff,
        fdp_hat_at_tau=float(min(rates.rates[unselected].sum(), 1.0)),
        mirror=None,
        diagnostics={
            "inclusion_rates": rates,
            "degenerate_cutoff": bool(np.min(rates.rates) > q),
            "failures": rates.failures,
        },
    )


def mds_select(
    data: Dataset,
    q: float,
    contrast: Contrast = Contrast.SUM,
    m: int = DEFAULT_M,
    rng: Generator | None = None,
    *,
    cv_folds: int = DEFAULT_CV_FOLDS,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
    n_jobs: int = 1,
) -> SelectionResult:
    """MDS selection. ``tau`` carries the inclusion-rate cutoff, not a mirror threshold."""
    rates = estimate_inclusion_rates(
        data,
        q,
        contrast,
        m,
        rng,
        cv_folds=cv_folds,
        lambda_grid_size=lambda_grid_size,
        n_jobs=n_jobs,
    )
    return select_by_rates(rates, q)


def normal_means_rates(
    x: np.ndarray, q: float, m: int, rng: Generator, *, n_jobs: int = 1
) -> InclusionRates:
    x = np.asarray(x, dtype=float)

    def selector(stream: Generator) -> SelectionResult:
        return normal_means_ds(x, q, stream)

    return inclusion_rates_from(selector, x.shape[1], m, rng, n_jobs=n_jobs)


def normal_means_mds(
    x: np.ndarray, q: float, m: int, rng: Generator, *, n_jobs: int = 1
) -> SelectionResult:
    return select_by_rates(normal_means_rates(x, q, m, rng, n_jobs=n_jobs), q)
