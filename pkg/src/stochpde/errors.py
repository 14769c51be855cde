"""Exception taxonomy shared by every module."""


class StochPdeError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(StochPdeError, ValueError):
    """A scalar parameter is out of its admissible range."""


class DimensionError(StochPdeError, ValueError):
    """Array shapes or grids are incompatible, or a grid is too small."""


class DomainError(StochPdeError, ValueError):
    """A query point lies outside the region where data is defined."""


class BoundaryError(StochPdeError, ValueError):
    """An update would read outside the domain with a non-periodic boundary."""


class ConfigurationError(StochPdeError, ValueError):
    """A run was configured in a way that fails a pre-flight gate
    (stability constraint, malformed config file, unsupported combination)."""


class DivergenceError(StochPdeError, RuntimeError):
    """Non-finite values or a stability violation appeared mid-run.

    Carries the time-step index where the problem was detected.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegeneracyError(StochPdeError, RuntimeError):
    """A diffusivity hit zero (loss of parabolicity) along a trajectory."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ConvergenceError(StochPdeError, RuntimeError):
    """An iterative procedure (shooting, root find) did not converge."""


class FlowError(StochPdeError, RuntimeError):
    """Numerical integration of a group flow failed."""


class UnsupportedDegreeError(StochPdeError, ValueError):
    """A polynomial operation produced a degree above the supported cap."""


class ReparametrizationError(StochPdeError, ValueError):
    """A field slice is not strictly monotone, so x <-> P cannot be inverted.

    Carries the time index of the offending slice.
    """

    def __init__(self, message, time_index=None):
        super().__init__(message)
        self.time_index = time_index
