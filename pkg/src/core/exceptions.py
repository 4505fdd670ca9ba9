"""Custom exceptions for snapdiff."""


class SnapDiffException(Exception):
    """Base exception for all snapdiff errors."""
    pass


class ShapeError(SnapDiffException, ValueError):
    """Raised when tensor shapes are incompatible for an operation."""
    pass


class NonFiniteError(SnapDiffException, ArithmeticError):
    """Raised when a primitive produces NaN or Inf."""

    def __init__(self, op: str):
        super().__init__(f"non-finite values produced by '{op}'")
        self.op = op


class GraphError(SnapDiffException):
    """Raised when backward cannot run on the recorded graph."""
    pass


class PreconditionError(SnapDiffException, ValueError):
    """Raised when an operation's documented precondition is violated."""
    pass


class ConfigurationError(SnapDiffException, ValueError):
    """Raised when a configuration is invalid or contains unknown keys."""
    pass


class CheckpointError(SnapDiffException):
    """Raised when a checkpoint cannot be read or fails its integrity check."""
    pass


class MissingGradientError(SnapDiffException):
    """Raised when an optimizer update lacks a gradient for a parameter."""
    pass


class NonFiniteLossError(SnapDiffException):
    """Raised when the training loss is NaN or Inf."""

    def __init__(self, step: int, sigma: list[float]):
        super().__init__(f"non-finite loss at batch {step}; sigma={sigma}")
        self.step = step
        self.sigma = sigma


class UsageError(SnapDiffException):
    """Raised for invalid command-line usage."""
    pass
