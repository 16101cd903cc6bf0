"""Dense matrix primitives shared by every estimator.

Matrices are numpy float64 arrays with observations in rows. Standard
deviations use denominator n.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from mirror_select.errors import (
    ConstantColumn,
    NotPositiveDefinite,
    TooFewRows,
)
from mirror_select.rng import Generator

MIN_ROWS = 4
MIN_COLUMNS = 2
CONSTANT_SD = 1e-12
STANDARDIZED_TOL = 1e-10
PIVOT_TOL = 1e-12


def standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center and scale every column to mean 0, sd 1.

    Returns the standardized matrix together with the original column means
    and sds so the transform can be undone.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    means = x.mean(axis=0)
    sds = x.std(axis=0)
    constant = np.flatnonzero(sds < CONSTANT_SD)
    if constant.size:
        raise ConstantColumn(int(constant[0]))
    return (x - means) / sds, means, sds


def unstandardize(z: np.ndarray, means: np.ndarray, sds: np.ndarray) -> np.ndarray:
    return np.asarray(z, dtype=float) * sds + means


def is_standardized(x: np.ndarray, tol: float = STANDARDIZED_TOL) -> bool:
    return bool(
        np.all(np.abs(x.mean(axis=0)) <= tol)
        and np.all(np.abs(x.std(axis=0) - 1.0) <= tol)
    )


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    standardized: bool
    column_means: np.ndarray
    column_sds: np.ndarray

    def __post_init__(self):
        n, p = self.x.shape
        if n < MIN_ROWS:
            raise TooFewRows(n, MIN_ROWS)
        if p < MIN_COLUMNS:
            raise ValueError(f"need at least {MIN_COLUMNS} columns, got {p}")
        if self.y.shape != (n,):
            raise ValueError(f"response has shape {self.y.shape}, expected ({n},)")
        if self.standardized and not is_standardized(self.x):
            raise ValueError("dataset flagged standardized but columns are not")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_arrays(cls, x, y, standardized: bool = True) -> "Dataset":
        """Build a dataset; by default columns are standardized and y centered."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float).reshape(-1)
        if not standardized:
            p = x.shape[1] if x.ndim == 2 else 0
            return cls(x, y, False, np.zeros(p), np.ones(p))
        if x.shape[0] < MIN_ROWS:
            raise TooFewRows(x.shape[0], MIN_ROWS)
        z, means, sds = standardize(x)
        return cls(z, y - y.mean(), True, means, sds)

    def restrict(self, rows: np.ndarray) -> "Dataset":
        """Rows subset, re-standardized so each half has unit-scale columns."""
        rows = np.asarray(rows)
        return Dataset.from_arrays(self.x[rows], self.y[rows], standardized=True)


@dataclass(frozen=True)
class SplitIndex:
    first_half: np.ndarray
    second_half: np.ndarray
    n: int = field(default=0)

    def __post_init__(self):
        both = np.concatenate([self.first_half, self.second_half])
        if len(np.unique(both)) != len(both):
            raise ValueError("split halves overlap")
        if self.n and not np.array_equal(np.sort(both), np.arange(self.n)):
            raise ValueError("split halves do not cover all rows")


def random_split(n: int, rng: Generator) -> SplitIndex:
    """Uniform half-half partition of range(n), first half of size n // 2."""
    if n < MIN_ROWS:
        raise TooFewRows(n, MIN_ROWS)
    perm = rng.permutation(n)
    half = n // 2
    return SplitIndex(np.sort(perm[:half]), np.sort(perm[half:]), n)


def cholesky_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ z = b for symmetric positive-definite a."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"right-hand side has length {b.shape[0]}, expected {a.shape[0]}")
    try:
        factor, lower = sla.cho_factor(a, lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivots = np.diag(factor) ** 2
    if np.any(pivots <= PIVOT_TOL):
        raise NotPositiveDefinite(f"pivot {pivots.min():.3e} below {PIVOT_TOL}")
    return sla.cho_solve((factor, lower), b)
