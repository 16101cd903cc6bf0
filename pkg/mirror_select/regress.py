"""Lasso by cyclic coordinate descent, k-fold CV over a lambda grid, and OLS.

The Lasso objective is (1/(2n))||y - X beta||^2 + lambda ||beta||_1 with no
intercept: callers pass standardized columns and a centered response.
Coordinate descent runs on the Gram form (X'X/n, X'y/n), keeping the
gradient X'(y - X beta)/n current with one rank-one update per changed
coordinate.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from mirror_select.debug import debug_log
from mirror_select.errors import (
    ConvergenceWarning,
    DidNotConverge,
    NotPositiveDefinite,
    RankDeficient,
    TooManyFeatures,
)
from mirror_select.linalg import Dataset, cholesky_solve
from mirror_select.rng import Generator
from mirror_select.settings import (
    CD_MAX_SWEEPS,
    CD_TOLERANCE,
    DEFAULT_CV_FOLDS,
    DEFAULT_GRID_SIZE,
    LAMBDA_MIN_RATIO,
)


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    lam: float
    support: np.ndarray
    n_iterations: int
    converged: bool
    objective_path: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray
    subset: np.ndarray
    residual_variance: float


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("threshold must be non-negative")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def lasso_objective(x: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    resid = y - x @ beta
    return float(resid @ resid / (2 * len(y)) + lam * np.abs(beta).sum())


def _coordinate_descent(gram, xty, yy, lam, beta, tol, max_sweeps, record):
    beta = np.array(beta, dtype=float)
    grad = xty - gram @ beta
    diag = np.diag(gram).tolist()
    p = len(beta)
    objectives = []

    def objective():
        return float(0.5 * yy - beta @ xty + 0.5 * beta @ gram @ beta + lam * np.abs(beta).sum())

    if record:
        objectives.append(objective())
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            d = diag[j]
            if d <= 0.0:
                continue
            old = beta[j]
            new = soft_threshold(grad[j] + d * old, lam) / d
            if new != old:
                delta = new - old
                grad -= delta * gram[j]
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if record:
            objectives.append(objective())
        if max_delta < tol:
            return beta, sweep, True, objectives
    return beta, max_sweeps, False, objectives


def _make_fit(beta, lam, sweeps, converged, objectives=()) -> LassoFit:
    return LassoFit(
        beta=beta,
        lam=float(lam),
        support=np.flatnonzero(beta),
        n_iterations=sweeps,
        converged=converged,
        objective_path=tuple(objectives),
    )


def lasso_fit(
    data: Dataset,
    lam: float,
    *,
    beta_init: np.ndarray | None = None,
    tol: float = CD_TOLERANCE,
    max_sweeps: int = CD_MAX_SWEEPS,
    record_objective: bool = False,
) -> LassoFit:
    """Fit the Lasso at a single lambda.

    Raises DidNotConverge (with the partial fit attached) when the sweep cap
    is reached before the largest coordinate update drops below ``tol``.
    """
    if not data.standardized:
        raise ValueError("lasso_fit expects a standardized dataset")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam == 0 and data.p > data.n:
        raise ValueError("lambda = 0 needs p <= n")
    n = data.n
    gram = data.x.T @ data.x / n
    xty = data.x.T @ data.y / n
    yy = float(data.y @ data.y / n)
    start = np.zeros(data.p) if beta_init is None else beta_init
    beta, sweeps, converged, objectives = _coordinate_descent(
        gram, xty, yy, lam, start, tol, max_sweeps, record_objective
    )
    fit = _make_fit(beta, lam, sweeps, converged, objectives)
    if not converged:
        raise DidNotConverge(fit, sweeps)
    return fit


def lambda_max(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest lambda at which every coefficient is zero."""
    return float(np.max(np.abs(x.T @ y)) / len(y))


def lambda_grid(
    x: np.ndarray,
    y: np.ndarray,
    size: int = DEFAULT_GRID_SIZE,
    min_ratio: float = LAMBDA_MIN_RATIO,
) -> np.ndarray:
    """Log-spaced grid from lambda_max down to min_ratio * lambda_max."""
    if size < 1:
        raise ValueError("grid size must be positive")
    top = lambda_max(x, y)
    if top == 0.0:
        return np.zeros(size)
    return np.geomspace(top, top * min_ratio, num=size)


def lasso_path(
    x: np.ndarray,
    y: np.ndarray,
    lambdas: np.ndarray,
    *,
    tol: float = CD_TOLERANCE,
    max_sweeps: int = CD_MAX_SWEEPS,
) -> list[LassoFit]:
    """Warm-started fits along a decreasing lambda sequence.

    A lambda that hits the sweep cap keeps its partial fit and emits a
    ConvergenceWarning; the path continues from it.
    """
    n = len(y)
    gram = x.T @ x / n
    xty = x.T @ y / n
    yy = float(y @ y / n)
    beta = np.zeros(x.shape[1])
    fits = []
    for lam in lambdas:
        beta, sweeps, converged, _ = _coordinate_descent(
            gram, xty, yy, float(lam), beta, tol, max_sweeps, False
        )
        if not converged:
            warnings.warn(
                f"coordinate descent hit {max_sweeps} sweeps at lambda={lam:.4g}",
                ConvergenceWarning,
                stacklevel=2,
            )
        fits.append(_make_fit(beta.copy(), lam, sweeps, converged))
    return fits


def _fold_errors(x, y, train, test, lambdas, tol, max_sweeps) -> np.ndarray:
    fits = lasso_path(x[train], y[train], lambdas, tol=tol, max_sweeps=max_sweeps)
    betas = np.column_stack([fit.beta for fit in fits])
    resid = y[test][:, None] - x[test] @ betas
    return np.mean(resid**2, axis=0)


def lasso_cv(
    data: Dataset,
    k: int = DEFAULT_CV_FOLDS,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
    rng: Generator | None = None,
    *,
    min_ratio: float = LAMBDA_MIN_RATIO,
    tol: float = CD_TOLERANCE,
    max_sweeps: int = CD_MAX_SWEEPS,
    n_jobs: int = 1,
) -> LassoFit:
    """Pick lambda by k-fold CV (minimum mean held-out MSE) and refit on all rows.

    Fold assignment is drawn from ``rng`` before any fold is fitted, so the
    result does not depend on ``n_jobs``.
    """
    if rng is None:
        raise ValueError("lasso_cv needs a seeded random stream")
    if k < 2:
        raise ValueError("need at least 2 folds")
    if data.n < 2 * k:
        raise ValueError(f"{data.n} rows are too few for {k} folds")
    x, y = data.x, data.y
    lambdas = lambda_grid(x, y, lambda_grid_size, min_ratio)
    folds = np.array_split(rng.permutation(data.n), k)
    all_rows = np.arange(data.n)

    tasks = (
        delayed(_fold_errors)(
            x, y, np.setdiff1d(all_rows, test), test, lambdas, tol, max_sweeps
        )
        for test in folds
    )
    errors = Parallel(n_jobs=n_jobs)(tasks)
    cv_error = np.mean(np.vstack(errors), axis=0)
    best = int(np.argmin(cv_error))

    # Warm start along the full-data path down to the chosen lambda.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        path = lasso_path(x, y, lambdas[: best + 1], tol=tol, max_sweeps=max_sweeps)
    fit = path[-1]
    debug_log(
        "lasso_cv",
        lam=fit.lam,
        grid_index=best,
        support_size=len(fit.support),
        sweeps=fit.n_iterations,
    )
    if not fit.converged:
        raise DidNotConverge(fit, fit.n_iterations)
    return fit


def ols_fit(x: np.ndarray, y: np.ndarray, subset) -> OlsFit:
    """Least squares of y on the columns of x listed in ``subset``."""
    subset = np.asarray(subset, dtype=int).reshape(-1)
    rows = x.shape[0]
    if len(subset) > rows:
        raise TooManyFeatures(len(subset), rows)
    if len(subset) == 0:
        return OlsFit(np.zeros(0), subset, float(y @ y / rows))
    xs = x[:, subset]
    try:
        beta = cholesky_solve(xs.T @ xs, xs.T @ y)
    except NotPositiveDefinite as exc:
        raise RankDeficient(f"Gram matrix of {len(subset)} columns is singular") from exc
    resid = y - xs @ beta
    dof = rows - len(subset)
    variance = float(resid @ resid / dof) if dof > 0 else float("nan")
    return OlsFit(beta, subset, variance)
