"""Exception types shared across the package."""


class OCIError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(OCIError, ValueError):
    """Matrix shapes do not line up."""


class NotPSDError(OCIError, ValueError):
    """A matrix that must be positive (semi)definite is not, within tolerance."""


class InfeasibleError(OCIError):
    """The fusion problem admits no unbiased gain with a finite consistent bound.

    ``reason`` is a short machine-readable code, e.g. ``"condition_rank"`` or
    ``"H_rank"``.
    """

    def __init__(self, message, reason="infeasible", diagnostics=None):
        super().__init__(message)
        self.reason = reason
        self.diagnostics = diagnostics or {}


class NumericalTroubleError(OCIError):
    """The conic solver did not converge or contradicts the exact rank test."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoProjectionBoundError(OCIError):
    """D P D^T is unbounded over the admissible set, so no bound M exists."""
