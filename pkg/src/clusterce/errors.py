"""Exception types raised by clusterce."""


class ClusterCEError(Exception):
    """Base class for all package errors."""


class InvalidConfigError(ClusterCEError, ValueError):
    pass


class DimensionMismatchError(ClusterCEError, ValueError):
    pass


class SingularSystemError(ClusterCEError, ArithmeticError):
    """The capacitance matrix ``lam*I + X D X^H`` could not be factored."""


class DegenerateMatrixError(ClusterCEError, ArithmeticError):
    pass


class AllBlocksPrunedError(ClusterCEError, ArithmeticError):
    pass


class RankDeficientError(ClusterCEError, ArithmeticError):
    pass


class ExcessiveFailuresError(ClusterCEError, RuntimeError):
    """More than the allowed fraction of trials in a sweep cell failed."""
