"""Exception types shared across the package."""


class LeeModelError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LeeModelError, ValueError):
    """Invalid parameters, grid, step size or config file."""


class RootFindingError(LeeModelError):
    """Newton iteration for the physical mass did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RegimeError(LeeModelError):
    """Operation requested in the wrong (stable/unstable) regime."""


class IntegrationError(LeeModelError):
    """A density-matrix invariant was violated during time stepping."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
