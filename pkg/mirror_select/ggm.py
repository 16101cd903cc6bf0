"""Gaussian graphical model edge selection by nodewise regression and the OR rule.

Each node is regressed on all the others with Lasso + OLS (DS) or with MDS
run inside the nodewise regression, always at level q / 2. Edge {i, j} is
declared when either endpoint selects the other.
"""

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from joblib import Parallel, delayed

from mirror_select.debug import debug_log, debug_warn
from mirror_select.errors import MirrorSelectError
from mirror_select.linalg import Dataset
from mirror_select.mds import Method, mds_select
from mirror_select.mirror import Contrast, ds_select
from mirror_select.rng import Generator, spawn_rngs
from mirror_select.settings import DEFAULT_CV_FOLDS, DEFAULT_GRID_SIZE, DEFAULT_M

Edge = tuple[int, int]


def edge(i: int, j: int) -> Edge:
    if i == j:
        raise ValueError(f"self-loop at node {i}")
    return (int(min(i, j)), int(max(i, j)))


def or_rule(neighborhoods: Iterable[Iterable[int]]) -> frozenset[Edge]:
    return frozenset(edge(j, k) for j, hood in enumerate(neighborhoods) for k in hood)


@dataclass(frozen=True)
class GraphEstimate:
    edges: frozenset[Edge]
    neighborhoods: tuple[np.ndarray, ...]
    level: float
    failures: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.edges != or_rule(self.neighborhoods):
            raise ValueError("edges disagree with the OR rule over neighborhoods")


def nodewise_select(
    x: np.ndarray,
    j: int,
    q_node: float,
    method: Method = Method.DS,
    m: int = DEFAULT_M,
    contrast: Contrast = Contrast.SUM,
    rng: Generator | None = None,
    *,
    cv_folds: int = DEFAULT_CV_FOLDS,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
) -> np.ndarray:
    """Neighbors of node j (original column indices) from regressing x_j on x_-j."""
    if rng is None:
        raise ValueError("nodewise_select needs a seeded random stream")
    p = x.shape[1]
    if p < 3:
        raise ValueError("nodewise regression needs at least 3 variables")
    others = np.delete(np.arange(p), j)
    data = Dataset.from_arrays(x[:, others], x[:, j])
    if method is Method.DS:
        result = ds_select(data, q_node, contrast, rng, cv_folds, lambda_grid_size=lambda_grid_size)
    elif method is Method.MDS:
        result = mds_select(
            data, q_node, contrast, m, rng, cv_folds=cv_folds, lambda_grid_size=lambda_grid_size
        )
    else:
        raise ValueError(f"method {method.value} does not apply to graphs")
    return others[result.selected]


def _node_task(nodewise, x, j, q_node, method, m, contrast, stream, cv_folds, grid):
    try:
        hood = nodewise(
            x, j, q_node, method, m, contrast, stream,
            cv_folds=cv_folds, lambda_grid_size=grid,
        )
        return np.asarray(hood, dtype=int), None
    except MirrorSelectError as exc:
        debug_warn("nodewise regression failed", node=j, error=type(exc).__name__)
        return np.zeros(0, dtype=int), f"{type(exc).__name__}: {exc}"


def ggm_select(
    x: np.ndarray,
    q: float,
    method: Method = Method.DS,
    m: int = DEFAULT_M,
    rng: Generator | None = None,
    *,
    contrast: Contrast = Contrast.SUM,
    cv_folds: int = DEFAULT_CV_FOLDS,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
    n_jobs: int = 1,
    nodewise: Callable[..., np.ndarray] = nodewise_select,
) -> GraphEstimate:
    """Graph estimate at nominal level q; every node is fitted at q / 2."""
    if rng is None:
        raise ValueError("ggm_select needs a seeded random stream")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    p = x.shape[1]
    streams = spawn_rngs(rng, "node", p)
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_node_task)(
            nodewise, x, j, q / 2, method, m, contrast, streams[j], cv_folds, lambda_grid_size
        )
        for j in range(p)
    )
    neighborhoods = tuple(hood for hood, _ in outcomes)
    failures = {j: error for j, (_, error) in enumerate(outcomes) if error is not None}
    estimate = GraphEstimate(or_rule(neighborhoods), neighborhoods, q, failures)
    debug_log("graph", edges=len(estimate.edges), failed_nodes=sorted(failures))
    return estimate


def fdp_power_edges(est: GraphEstimate, truth: Iterable[Edge]) -> tuple[float, float]:
    truth = frozenset(edge(i, j) for i, j in truth)
    found = est.edges
    fdp = len(found - truth) / max(len(found), 1)
    power = len(found & truth) / max(len(truth), 1)
    return fdp, power
