import os

# Defaults; every one of them can be overridden through ExperimentConfig or CLI flags.
DEFAULT_Q = 0.1
DEFAULT_GGM_Q = 0.2
DEFAULT_M = 50
DEFAULT_CV_FOLDS = 10
DEFAULT_GRID_SIZE = 100
LAMBDA_MIN_RATIO = 1e-3
CD_TOLERANCE = 1e-7
CD_MAX_SWEEPS = 10_000
PD_REPAIR_MARGIN = 0.005

THREADS_ENV = "MIRROR_SELECT_THREADS"
DEBUG_ENV = "MIRROR_SELECT_DEBUG"


def debug_enabled() -> bool:
    return os.getenv(DEBUG_ENV) == "true"


def resolve_workers(workers: int) -> int:
    """MIRROR_SELECT_THREADS wins over the configured worker count."""
    override = os.getenv(THREADS_ENV)
    if override:
        try:
            value = int(override)
        except ValueError:
            return workers
        if value >= 1:
            return value
    return workers
