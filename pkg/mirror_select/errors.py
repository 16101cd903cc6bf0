"""Exception hierarchy.

Every error carries the process exit code the CLI reports for it.
"""


class MirrorSelectError(Exception):
    exit_code = 3


class ConfigError(MirrorSelectError):
    exit_code = 2


class BadDimension(ConfigError):
    pass


class NumericalError(MirrorSelectError):
    exit_code = 3


class ConstantColumn(NumericalError):
    def __init__(self, column: int):
        super().__init__(f"column {column} is constant")
        self.column = column


class TooFewRows(NumericalError):
    def __init__(self, n: int, minimum: int = 4):
        super().__init__(f"need at least {minimum} rows, got {n}")
        self.n = n


class NotPositiveDefinite(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class TooManyFeatures(NumericalError):
    def __init__(self, size: int, rows: int):
        super().__init__(f"subset of {size} features exceeds {rows} rows")
        self.size = size
        self.rows = rows


class DidNotConverge(NumericalError):
    """Raised with the partial fit attached; callers decide whether to use it."""

    def __init__(self, fit, sweeps: int):
        super().__init__(f"coordinate descent stopped after {sweeps} sweeps")
        self.fit = fit


class RepairFailed(NumericalError):
    pass


class ConvergenceWarning(UserWarning):
    pass
