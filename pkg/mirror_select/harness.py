"""Monte-Carlo experiment engine: configs, per-rep metrics, summaries, the BHq baseline.

Each replication draws every random number from the substream
(master_seed, "rep", rep), so records do not depend on the worker count.
Failed replications are kept in the record stream with an ``error:`` status
and left out of the summary.
"""

import math
import time
from enum import Enum
from typing import Literal

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, Field, model_validator
from scipy import stats

from mirror_select.debug import debug_warn
from mirror_select.errors import MirrorSelectError
from mirror_select.ggm import fdp_power_edges, ggm_select
from mirror_select.linalg import Dataset
from mirror_select.mds import Method, mds_select, normal_means_mds, normal_means_rates
from mirror_select.mirror import (
    Contrast,
    SelectionResult,
    ds_select,
    normal_means_ds,
    normal_means_statistics,
)
from mirror_select.rng import derive_rng
from mirror_select.settings import (
    DEFAULT_CV_FOLDS,
    DEFAULT_GRID_SIZE,
    DEFAULT_M,
    DEFAULT_Q,
    resolve_workers,
)
from mirror_select.synth import (
    CovarianceKind,
    CovarianceSpec,
    DesignDistribution,
    DesignSpec,
    GraphSpec,
    sample_conditioned_pair_means,
    sample_design,
    sample_gaussian_graph_data,
    sample_linear_truth,
    sample_normal_means,
    sample_response,
)

SPEC_VERSION = 1
MAX_SEED = 2**64


class Scenario(str, Enum):
    LINEAR = "linear"
    GGM = "ggm"
    NORMAL_MEANS = "normal_means"


class LinearSettings(BaseModel):
    n: int = 500
    p: int = 500
    p1: int = 50
    delta: float = 5.0
    design: DesignDistribution = DesignDistribution.GAUSSIAN
    covariance: CovarianceKind = CovarianceKind.TOEPLITZ_BLOCK
    rho: float = 0.5
    delta_as_variance: bool = False

    def design_spec(self) -> DesignSpec:
        return DesignSpec(
            distribution=self.design,
            covariance=CovarianceSpec(kind=self.covariance, rho=self.rho, p=self.p),
            n=self.n,
        )


class GraphSettings(BaseModel):
    n: int = 1000
    graph: GraphSpec = Field(default_factory=lambda: GraphSpec(p=100))


class NormalMeansSettings(BaseModel):
    n: int = 500
    p: int = 800
    p1: int = 160
    mu_sd: float = 0.5


class ExperimentConfig(BaseModel):
    spec_version: Literal[1] = SPEC_VERSION
    scenario: Scenario = Scenario.LINEAR
    method: Method = Method.DS
    q: float = DEFAULT_Q
    m: int = DEFAULT_M
    contrast: Contrast = Contrast.SUM
    n_reps: int = 20
    master_seed: int = 0
    workers: int = 1
    cv_folds: int = DEFAULT_CV_FOLDS
    lambda_grid_size: int = DEFAULT_GRID_SIZE
    record_timing: bool = False
    linear: LinearSettings = Field(default_factory=LinearSettings)
    ggm: GraphSettings = Field(default_factory=GraphSettings)
    normal_means: NormalMeansSettings = Field(default_factory=NormalMeansSettings)

    @model_validator(mode="after")
    def check_ranges(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.n_reps < 1 or self.m < 1 or self.workers < 1:
            raise ValueError("n_reps, m and workers must be at least 1")
        if not 0 <= self.master_seed < MAX_SEED:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.method is Method.BHQ and self.scenario is not Scenario.NORMAL_MEANS:
            raise ValueError("BHQ needs exact p-values and only runs on normal_means")
        return self


class MetricsRecord(BaseModel):
    rep: int
    fdp: float = 0.0
    power: float = 0.0
    n_selected: int = 0
    cutoff: float = math.nan
    wall_time_ms: float = 0.0
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class ExperimentSummary(BaseModel):
    scenario: Scenario
    method: Method
    n_reps: int
    n_ok: int
    n_failed: int
    fdr: float
    fdp_sd: float
    power: float
    power_sd: float
    mean_selected: float


class SwapSettings(BaseModel):
    n: int = 200
    p: int = 800
    n_reps: int = 500
    method: Method = Method.DS
    m_multiplier: int = 10
    q: float = DEFAULT_Q
    master_seed: int = 0
    workers: int = 1

    @model_validator(mode="after")
    def check_method(self):
        if self.method is Method.BHQ:
            raise ValueError("swap experiment compares DS and MDS rankings only")
        if self.n < 4 or self.p < 3 or self.n_reps < 1 or self.m_multiplier < 1:
            raise ValueError("need n >= 4, p >= 3, n_reps >= 1, m_multiplier >= 1")
        return self


class SwapReport(BaseModel):
    method: Method
    n: int
    m: int
    n_reps: int
    swap_probability: float
    standard_error: float


def bh_procedure(pvalues, q: float) -> np.ndarray:
    """Benjamini-Hochberg step-up: reject the k smallest, k = max{k : p_(k) <= k q / p}."""
    pvalues = np.asarray(pvalues, dtype=float)
    if np.any(~np.isfinite(pvalues)) or np.any((pvalues < 0) | (pvalues > 1)):
        raise ValueError("p-values must be finite and lie in [0, 1]")
    p = len(pvalues)
    order = np.argsort(pvalues, kind="stable")
    passing = np.flatnonzero(pvalues[order] <= np.arange(1, p + 1) * q / p)
    if passing.size == 0:
        return np.zeros(0, dtype=int)
    return np.sort(order[: passing[-1] + 1])


def normal_means_pvalues(x: np.ndarray) -> np.ndarray:
    """Two-sided p-values 2 * Phi(-|sqrt(n) * xbar_j|)."""
    x = np.asarray(x, dtype=float)
    z = np.sqrt(x.shape[0]) * x.mean(axis=0)
    return 2 * stats.norm.sf(np.abs(z))


def fdp_power(selected, s1, p: int) -> tuple[float, float]:
    selected = np.unique(np.asarray(selected, dtype=int))
    s1 = np.unique(np.asarray(s1, dtype=int))
    if selected.size and (selected.min() < 0 or selected.max() >= p):
        raise ValueError("selected indices fall outside range(p)")
    true_positives = len(np.intersect1d(selected, s1))
    fdp = (len(selected) - true_positives) / max(len(selected), 1)
    power = true_positives / max(len(s1), 1)
    return fdp, power


def _linear_rep(config: ExperimentConfig, rng) -> tuple[SelectionResult, np.ndarray, int]:
    settings = config.linear
    x = sample_design(settings.design_spec(), rng)
    truth = sample_linear_truth(
        settings.p, settings.p1, settings.delta, settings.n, rng,
        delta_as_variance=settings.delta_as_variance,
    )
    data = Dataset.from_arrays(x, sample_response(x, truth, rng))
    if config.method is Method.MDS:
        result = mds_select(
            data, config.q, config.contrast, config.m, rng,
            cv_folds=config.cv_folds, lambda_grid_size=config.lambda_grid_size,
        )
    else:
        result = ds_select(
            data, config.q, config.contrast, rng, config.cv_folds,
            lambda_grid_size=config.lambda_grid_size,
        )
    return result, truth.s1, settings.p


def _normal_means_rep(config: ExperimentConfig, rng) -> tuple[np.ndarray, float, np.ndarray, int]:
    settings = config.normal_means
    x, s1, _ = sample_normal_means(settings.n, settings.p, settings.p1, settings.mu_sd, rng)
    if config.method is Method.BHQ:
        selected = bh_procedure(normal_means_pvalues(x), config.q)
        return selected, len(selected) * config.q / settings.p, s1, settings.p
    if config.method is Method.MDS:
        result = normal_means_mds(x, config.q, config.m, rng)
    else:
        result = normal_means_ds(x, config.q, rng)
    return result.selected, result.tau, s1, settings.p


def run_replication(config: ExperimentConfig, rep: int) -> MetricsRecord:
    rng = derive_rng(config.master_seed, "rep", rep)
    started = time.perf_counter()
    try:
        if config.scenario is Scenario.LINEAR:
            result, s1, p = _linear_rep(config, rng)
            selected, cutoff = result.selected, result.tau
            fdp, power = fdp_power(selected, s1, p)
            n_selected = len(selected)
        elif config.scenario is Scenario.NORMAL_MEANS:
            selected, cutoff, s1, p = _normal_means_rep(config, rng)
            fdp, power = fdp_power(selected, s1, p)
            n_selected = len(selected)
        else:
            x, truth = sample_gaussian_graph_data(config.ggm.graph, config.ggm.n, rng)
            estimate = ggm_select(
                x, config.q, config.method, config.m, rng,
                contrast=config.contrast, cv_folds=config.cv_folds,
                lambda_grid_size=config.lambda_grid_size,
            )
            fdp, power = fdp_power_edges(estimate, truth)
            n_selected, cutoff = len(estimate.edges), config.q / 2
    except MirrorSelectError as exc:
        debug_warn("replication failed", rep=rep, error=type(exc).__name__, detail=str(exc))
        return MetricsRecord(rep=rep, status=f"error:{type(exc).__name__}")
    elapsed = (time.perf_counter() - started) * 1000 if config.record_timing else 0.0
    return MetricsRecord(
        rep=rep,
        fdp=fdp,
        power=power,
        n_selected=n_selected,
        cutoff=float(cutoff),
        wall_time_ms=elapsed,
    )


def _sd(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def summarize(config: ExperimentConfig, records: list[MetricsRecord]) -> ExperimentSummary:
    ok = [record for record in records if record.ok]
    fdps = np.array([record.fdp for record in ok])
    powers = np.array([record.power for record in ok])
    sizes = np.array([record.n_selected for record in ok], dtype=float)
    if len(ok) < len(records):
        debug_warn("failed replications excluded", count=len(records) - len(ok))
    return ExperimentSummary(
        scenario=config.scenario,
        method=config.method,
        n_reps=len(records),
        n_ok=len(ok),
        n_failed=len(records) - len(ok),
        fdr=float(fdps.mean()) if len(ok) else math.nan,
        fdp_sd=_sd(fdps),
        power=float(powers.mean()) if len(ok) else math.nan,
        power_sd=_sd(powers),
        mean_selected=float(sizes.mean()) if len(ok) else math.nan,
    )


def run_experiment(config: ExperimentConfig) -> tuple[list[MetricsRecord], ExperimentSummary]:
    """All replications of ``config``, ordered by rep, plus their summary."""
    workers = resolve_workers(config.workers)
    records = Parallel(n_jobs=workers)(
        delayed(run_replication)(config, rep) for rep in range(config.n_reps)
    )
    records = sorted(records, key=lambda record: record.rep)
    return records, summarize(config, records)


def _swap_rep(settings: SwapSettings, rep: int) -> bool:
    rng = derive_rng(settings.master_seed, "swap", rep)
    x = sample_conditioned_pair_means(settings.n, settings.p, rng)
    if settings.method is Method.MDS:
        rates = normal_means_rates(x, settings.q, settings.m_multiplier * settings.n, rng).rates
        return bool(rates[0] < rates[1])
    m = normal_means_statistics(x, rng)
    return bool(m[0] < m[1])


def swap_probability(settings: SwapSettings) -> SwapReport:
    """Estimate how often the ranking of the two pinned features is reversed."""
    workers = resolve_workers(settings.workers)
    swaps = Parallel(n_jobs=workers)(
        delayed(_swap_rep)(settings, rep) for rep in range(settings.n_reps)
    )
    estimate = float(np.mean(swaps))
    m = settings.m_multiplier * settings.n if settings.method is Method.MDS else 1
    return SwapReport(
        method=settings.method,
        n=settings.n,
        m=m,
        n_reps=settings.n_reps,
        swap_probability=estimate,
        standard_error=math.sqrt(estimate * (1 - estimate) / settings.n_reps),
    )
