"""Synthetic designs, coefficient vectors, responses and graphs for simulations."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, model_validator
from scipy import linalg as sla
from scipy import stats

from mirror_select.debug import debug_log
from mirror_select.errors import BadDimension, NotPositiveDefinite, RepairFailed
from mirror_select.linalg import standardize
from mirror_select.rng import Generator
from mirror_select.settings import PD_REPAIR_MARGIN

TOEPLITZ_BLOCKS = 10


class CovarianceKind(str, Enum):
    TOEPLITZ_BLOCK = "toeplitz_block"
    CONSTANT = "constant"
    IDENTITY = "identity"


class DesignDistribution(str, Enum):
    GAUSSIAN = "gaussian"
    MIXTURE2 = "mixture2"
    STUDENT_T = "student_t"


class GraphKind(str, Enum):
    BANDED = "banded"
    BLOCK_DIAG = "block_diag"


class CovarianceSpec(BaseModel):
    kind: CovarianceKind = CovarianceKind.TOEPLITZ_BLOCK
    rho: float = 0.5
    p: int

    @model_validator(mode="after")
    def check_rho(self):
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if self.kind is not CovarianceKind.IDENTITY and not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        return self


class DesignSpec(BaseModel):
    distribution: DesignDistribution = DesignDistribution.GAUSSIAN
    covariance: CovarianceSpec
    n: int
    df: float = 3.0
    offset: float = 0.5

    @model_validator(mode="after")
    def check_df(self):
        if self.distribution is DesignDistribution.STUDENT_T and self.df <= 2:
            raise ValueError("student_t design needs df > 2")
        if self.n < 1:
            raise ValueError("n must be positive")
        return self


class GraphSpec(BaseModel):
    kind: GraphKind = GraphKind.BANDED
    p: int
    s: int = 8
    a: float = -0.6
    c: float = 1.5
    block: int = 25
    low: float = 0.4
    high: float = 0.8

    @model_validator(mode="after")
    def check_shape(self):
        if self.kind is GraphKind.BANDED:
            if not abs(self.a) < 1:
                raise ValueError("banded graph needs |a| < 1")
            if self.s < 1 or self.c <= 0:
                raise ValueError("banded graph needs s >= 1 and c > 0")
        elif not 0 <= self.low < self.high:
            raise ValueError("block graph needs 0 <= low < high")
        return self


@dataclass(frozen=True)
class LinearTruth:
    beta_star: np.ndarray
    s1: np.ndarray
    delta: float
    noise_sd: float = 1.0


def build_covariance(spec: CovarianceSpec) -> np.ndarray:
    p = spec.p
    if spec.kind is CovarianceKind.IDENTITY:
        return np.eye(p)
    if spec.kind is CovarianceKind.CONSTANT:
        sigma = np.full((p, p), spec.rho)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    if p % TOEPLITZ_BLOCKS or p // TOEPLITZ_BLOCKS < 2:
        raise BadDimension(f"Toeplitz blocks need p divisible by {TOEPLITZ_BLOCKS}, got p={p}")
    size = p // TOEPLITZ_BLOCKS
    lag = np.arange(size)
    # Off-diagonals descend linearly from (size-2)/(size-1) * rho to 0 at the corner.
    column = (size - 1 - lag) * spec.rho / (size - 1)
    column[0] = 1.0
    block = sla.toeplitz(column)
    return sla.block_diag(*([block] * TOEPLITZ_BLOCKS))


def _cholesky(matrix: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def sample_design(
    spec: DesignSpec, rng: Generator, *, standardize_output: bool = True
) -> np.ndarray:
    """n x p design with rows drawn from the configured distribution."""
    sigma = build_covariance(spec.covariance)
    chol = _cholesky(sigma)
    x = rng.standard_normal((spec.n, spec.covariance.p)) @ chol.T
    if spec.distribution is DesignDistribution.MIXTURE2:
        signs = rng.choice(np.array([-1.0, 1.0]), size=spec.n)
        x += spec.offset * signs[:, None]
    elif spec.distribution is DesignDistribution.STUDENT_T:
        # Sigma is the scale matrix; the covariance is df / (df - 2) * Sigma.
        x *= np.sqrt(spec.df / rng.chisquare(spec.df, size=spec.n))[:, None]
    if standardize_output:
        x, _, _ = standardize(x)
    return x


def sample_linear_truth(
    p: int,
    p1: int,
    delta: float,
    n: int,
    rng: Generator,
    *,
    delta_as_variance: bool = False,
) -> LinearTruth:
    """Random signal set of size p1 with N(0, scale^2) coefficients.

    scale = delta * sqrt(log p / n), or its square root with ``delta_as_variance``.
    """
    if not 0 <= p1 <= p:
        raise ValueError("need 0 <= p1 <= p")
    s1 = np.sort(rng.choice(p, size=p1, replace=False)) if p1 else np.zeros(0, dtype=int)
    scale = delta * np.sqrt(np.log(p) / n)
    sd = np.sqrt(scale) if delta_as_variance else scale
    beta = np.zeros(p)
    beta[s1] = sd * rng.standard_normal(p1)
    return LinearTruth(beta, s1, float(delta))


def sample_response(
    x: np.ndarray, truth: LinearTruth, rng: Generator, *, noise: bool = True
) -> np.ndarray:
    """y = x beta* + eps, centered."""
    if x.shape[1] != len(truth.beta_star):
        raise ValueError("design and coefficient dimensions differ")
    y = x @ truth.beta_star
    if noise:
        y = y + truth.noise_sd * rng.standard_normal(x.shape[0])
    return y - y.mean()


def _edges(precision: np.ndarray) -> frozenset[tuple[int, int]]:
    rows, cols = np.nonzero(np.triu(precision, k=1))
    return frozenset(zip(rows.tolist(), cols.tolist()))


def build_precision(
    spec: GraphSpec, rng: Generator | None = None
) -> tuple[np.ndarray, frozenset[tuple[int, int]]]:
    """Precision matrix for the graph and its true edge set.

    Edges are read before the positive-definite repair, which only shifts the
    diagonal. Block graphs draw their entries from ``rng``.
    """
    p = spec.p
    if spec.kind is GraphKind.BANDED:
        lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        band = np.sign(spec.a) * np.abs(spec.a) ** (lag / spec.c)
        precision = np.where((lag > 0) & (lag <= spec.s), band, 0.0)
    else:
        if rng is None:
            raise ValueError("block graphs need a seeded random stream")
        if p % spec.block:
            raise BadDimension(f"p={p} is not a multiple of block size {spec.block}")
        precision = np.zeros((p, p))
        upper = np.triu_indices(spec.block, k=1)
        for start in range(0, p, spec.block):
            size = len(upper[0])
            magnitudes = rng.uniform(spec.low, spec.high, size)
            values = magnitudes * rng.choice(np.array([-1.0, 1.0]), size)
            block = np.zeros((spec.block, spec.block))
            block[upper] = values
            precision[start : start + spec.block, start : start + spec.block] = block + block.T
    np.fill_diagonal(precision, 1.0)
    edges = _edges(precision)

    smallest = float(np.linalg.eigvalsh(precision)[0])
    if smallest <= 0:
        shift = abs(smallest) + PD_REPAIR_MARGIN
        precision = precision + shift * np.eye(p)
        debug_log("precision repaired", smallest_eigenvalue=smallest, shift=shift)
        if np.linalg.eigvalsh(precision)[0] <= 0:
            raise RepairFailed(f"eigenvalue still non-positive after shift {shift}")
    return precision, edges


def sample_gaussian_graph_data(
    spec: GraphSpec, n: int, rng: Generator, *, standardize_output: bool = True
) -> tuple[np.ndarray, frozenset[tuple[int, int]]]:
    """Rows from N(0, Lambda^-1): with Lambda = L L', solve L' w = z."""
    precision, edges = build_precision(spec, rng)
    chol = _cholesky(precision)
    z = rng.standard_normal((spec.p, n))
    x = sla.solve_triangular(chol, z, lower=True, trans="T").T
    if standardize_output:
        x, _, _ = standardize(x)
    return x, edges


def sample_normal_means(
    n: int, p: int, p1: int, mu_sd: float, rng: Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normal means model: x_ij = mu_j + N(0, 1), p1 nonzero means from N(0, mu_sd^2)."""
    if not 0 <= p1 <= p:
        raise ValueError("need 0 <= p1 <= p")
    s1 = np.sort(rng.choice(p, size=p1, replace=False)) if p1 else np.zeros(0, dtype=int)
    mu = np.zeros(p)
    mu[s1] = mu_sd * rng.standard_normal(p1)
    x = mu + rng.standard_normal((n, p))
    return x, s1, mu


def _column_with_mean(n: int, mean: float, rng: Generator) -> np.ndarray:
    # Given its sample mean, an i.i.d. N(mu, 1) sample is the mean plus centered noise.
    noise = rng.standard_normal(n)
    return noise - noise.mean() + mean


def sample_conditioned_pair_means(
    n: int,
    p: int,
    rng: Generator,
    *,
    pvalue: float = 0.02,
    gap: float = 0.02,
    signal_fraction: float = 0.2,
    mu_sd: float = 0.5,
) -> np.ndarray:
    """Normal means data whose first two columns have pinned sample means.

    Column 0 has two-sided p-value ``pvalue``; column 1's mean sits
    ``gap / sqrt(n)`` below it (p-value about 0.021 by default). Among the
    remaining columns a ``signal_fraction`` share carry N(0, mu_sd^2) means.
    """
    if p < 3:
        raise ValueError("need at least 3 columns")
    first = stats.norm.isf(pvalue / 2) / np.sqrt(n)
    second = first - gap / np.sqrt(n)
    rest, _, _ = sample_normal_means(n, p - 2, int(round(signal_fraction * (p - 2))), mu_sd, rng)
    pair = np.column_stack([_column_with_mean(n, first, rng), _column_with_mean(n, second, rng)])
    return np.hstack([pair, rest])
