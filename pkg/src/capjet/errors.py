"""Exception types raised across the package."""


class CapjetError(Exception):
    """Base class for all package errors."""


class OddPointCount(CapjetError, ValueError):
    pass


class InvalidGrid(CapjetError, ValueError):
    pass


class GridMismatch(CapjetError, ValueError):
    pass


class NonHermitianMultiplier(CapjetError, ValueError):
    pass


class NonpositiveRadius(CapjetError, ValueError):
    """The surface touches (or crosses) the pinch-off floor."""


class NoConvergence(CapjetError, RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"elliptic solve did not converge: {iterations} iterations, "
            f"residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class StepRejected(CapjetError, RuntimeError):
    pass


class WindowTooShort(CapjetError, ValueError):
    pass


class ConfigError(CapjetError, ValueError):
    pass
