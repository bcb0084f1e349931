"""Exception types shared across the package."""


class NumericalBlowupError(RuntimeError):
    """Raised when a propagation step produces non-finite values."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative relaxation fails to converge.

    Carries the last energy estimate so the caller can inspect how far the
    iteration got.
    """

    def __init__(self, message, last_energy=None):
        super().__init__(message)
        self.last_energy = last_energy


class InternalConsistencyError(RuntimeError):
    """Raised when a quantity that must be real develops an imaginary part."""
