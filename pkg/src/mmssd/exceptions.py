"""Exception types raised by the estimators and simulators."""

from numpy.linalg import LinAlgError


class DimensionError(ValueError):
    """Shapes or sizes of the inputs are inconsistent."""


class RankDeficiencyError(LinAlgError):
    """A least-squares design matrix has linearly dependent columns."""


class NumericalFailureError(RuntimeError):
    """An iterative numerical routine failed to bracket or converge."""
