"""Mirror statistics, the FDP-hat cutoff, and the single-data-split selector."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from mirror_select.debug import debug_log
from mirror_select.linalg import Dataset, SplitIndex, random_split
from mirror_select.regress import lasso_cv, ols_fit
from mirror_select.rng import Generator
from mirror_select.settings import DEFAULT_CV_FOLDS, DEFAULT_GRID_SIZE


class Contrast(str, Enum):
    MIN2 = "min2"
    PRODUCT = "product"
    SUM = "sum"

    def combine(self, u, v):
        """f(u, v) for non-negative magnitudes (scalars or arrays)."""
        if self is Contrast.MIN2:
            return 2 * np.minimum(u, v)
        if self is Contrast.PRODUCT:
            return u * v
        return u + v


@dataclass(frozen=True)
class SplitFit:
    split: SplitIndex
    beta1: np.ndarray
    beta2: np.ndarray
    support: np.ndarray
    lam: float


@dataclass(frozen=True)
class MirrorVector:
    m: np.ndarray
    contrast: Contrast
    split_fit: SplitFit | None = None

    def __post_init__(self):
        if self.split_fit is not None:
            outside = np.setdiff1d(np.arange(len(self.m)), self.split_fit.support)
            if np.any(self.m[outside] != 0):
                raise ValueError("unscreened features must carry a zero mirror statistic")


@dataclass(frozen=True)
class SelectionResult:
    selected: np.ndarray
    tau: float
    fdp_hat_at_tau: float
    mirror: MirrorVector | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def n_selected(self) -> int:
        return len(self.selected)


def _values(m) -> np.ndarray:
    if isinstance(m, MirrorVector):
        return m.m
    return np.asarray(m, dtype=float)


def mirror_statistic(b1: float, b2: float, contrast: Contrast = Contrast.SUM) -> float:
    """sign(b1 * b2) * f(|b1|, |b2|); zero if either coefficient is zero."""
    sign = np.sign(b1 * b2)
    if sign == 0:
        return 0.0
    return float(sign * contrast.combine(abs(b1), abs(b2)))


def mirror_statistics(
    b1: np.ndarray, b2: np.ndarray, contrast: Contrast = Contrast.SUM
) -> np.ndarray:
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    return np.sign(b1 * b2) * contrast.combine(np.abs(b1), np.abs(b2))


def fdp_hat(m, t: float) -> float:
    """#{m_j < -t} / max(#{m_j > t}, 1)."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    values = _values(m)
    negatives = int(np.count_nonzero(values < -t))
    positives = int(np.count_nonzero(values > t))
    return negatives / max(positives, 1)


def select_cutoff(m, q: float) -> tuple[float, float]:
    """Smallest candidate |m_j| with fdp_hat <= q.

    Candidates are the distinct nonzero |m_j|. The largest candidate always
    qualifies, so tau is +inf only when every statistic is zero.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    values = _values(m)
    candidates = np.unique(np.abs(values[values != 0]))
    if candidates.size == 0:
        return math.inf, 0.0
    ordered = np.sort(values)
    positives = len(ordered) - np.searchsorted(ordered, candidates, side="right")
    negatives = np.searchsorted(ordered, -candidates, side="left")
    ratios = negatives / np.maximum(positives, 1)
    first = int(np.flatnonzero(ratios <= q)[0])
    return float(candidates[first]), float(ratios[first])


def select(mirror: MirrorVector, q: float, **diagnostics) -> SelectionResult:
    tau, fdp = select_cutoff(mirror, q)
    selected = np.flatnonzero(mirror.m > tau)
    debug_log("cutoff", tau=tau, fdp_hat=fdp, n_selected=len(selected))
    return SelectionResult(selected, tau, fdp, mirror, dict(diagnostics))


def fit_split(
    data: Dataset,
    split: SplitIndex,
    rng: Generator,
    cv_folds: int = DEFAULT_CV_FOLDS,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
) -> tuple[SplitFit, dict[str, Any]]:
    """Lasso + OLS: Lasso-CV screening on the first half, OLS on the second."""
    first = data.restrict(split.first_half)
    second = data.restrict(split.second_half)
    lasso = lasso_cv(first, cv_folds, lambda_grid_size, rng)
    support = lasso.support
    notes: dict[str, Any] = {"lambda": lasso.lam, "n_screened": int(len(support))}

    # OLS needs more rows than columns on the second half.
    if len(support) >= data.n // 2:
        keep = data.n // 4
        order = np.argsort(-np.abs(lasso.beta[support]), kind="stable")
        support = np.sort(support[order[:keep]])
        notes["truncated_to"] = keep
        debug_log("screening truncated", screened=notes["n_screened"], kept=keep)

    beta2 = np.zeros(data.p)
    if len(support):
        ols = ols_fit(second.x, second.y, support)
        beta2[support] = ols.beta
    beta1 = np.zeros(data.p)
    beta1[support] = lasso.beta[support]
    return SplitFit(split, beta1, beta2, support, lasso.lam), notes


def ds_select(
    data: Dataset,
    q: float,
    contrast: Contrast = Contrast.SUM,
    rng: Generator | None = None,
    cv_folds: int = DEFAULT_CV_FOLDS,
    *,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
) -> SelectionResult:
    """Single data split: split, Lasso + OLS, mirror statistics, cutoff."""
    if rng is None:
        raise ValueError("ds_select needs a seeded random stream")
    if not data.standardized:
        raise ValueError("ds_select expects a standardized dataset")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    split = random_split(data.n, rng)
    debug_log("split", first_half=len(split.first_half), second_half=len(split.second_half))
    split_fit, notes = fit_split(data, split, rng, cv_folds, lambda_grid_size)
    m = np.zeros(data.p)
    support = split_fit.support
    m[support] = mirror_statistics(split_fit.beta1[support], split_fit.beta2[support], contrast)
    mirror = MirrorVector(m, contrast, split_fit)
    if len(support) == 0:
        debug_log("empty screen", lam=split_fit.lam)
        return SelectionResult(
            np.zeros(0, dtype=int), math.inf, 0.0, mirror, {**notes, "empty_screen": True}
        )
    return select(mirror, q, **notes)


def normal_means_mirror(xbar1, xbar2):
    """|xbar1 + xbar2| - |xbar1 - xbar2|, elementwise for arrays."""
    return np.abs(xbar1 + xbar2) - np.abs(xbar1 - xbar2)


def normal_means_statistics(x: np.ndarray, rng: Generator) -> np.ndarray:
    """Mirror statistics built from the column means of two random halves."""
    split = random_split(x.shape[0], rng)
    xbar1 = x[split.first_half].mean(axis=0)
    xbar2 = x[split.second_half].mean(axis=0)
    return normal_means_mirror(xbar1, xbar2)


def normal_means_ds(x: np.ndarray, q: float, rng: Generator) -> SelectionResult:
    """DS for the Normal means model, columns being unit-variance Gaussians."""
    m = normal_means_statistics(np.asarray(x, dtype=float), rng)
    return select(MirrorVector(m, Contrast.MIN2), q)
