"""Exception types shared across the package."""


class FgpcError(Exception):
    """Base class for all package errors."""


class GridError(FgpcError, ValueError):
    """Invalid periodic grid (odd or too small node count, bad period)."""


class DimensionError(FgpcError, ValueError):
    """Array shapes do not conform."""


class DomainError(FgpcError, ValueError):
    """An argument lies outside its admissible range."""


class NoJumpError(FgpcError):
    """The signal is (numerically) flat, so there is nothing to detect."""


class DetectionError(FgpcError):
    """Jump detection could not locate two discontinuities."""


class DegenerateSignalError(FgpcError):
    """Reconstruction found an empty group above or below the separation line."""


class ConvergenceError(FgpcError):
    """An iterative solver failed to converge."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class StageError(FgpcError):
    """A stage of the predictor-corrector pipeline failed.

    The failing stage name is kept in ``stage`` and the original exception is
    chained as ``__cause__``.
    """

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
