"""Exception types shared across the package."""


class HermiteLabError(Exception):
    """Base class for every error raised by hermite_lab."""


class ParameterError(HermiteLabError, ValueError):
    """Argument outside its admissible domain."""


class IntervalError(HermiteLabError, ValueError):
    """Invalid or non-integrable integration interval."""


class ToleranceError(HermiteLabError, RuntimeError):
    """Quadrature did not reach the target tolerance.

    Carries the best value obtained and the achieved error estimate.
    """

    def __init__(self, message: str, value: float, estimate: float):
        super().__init__(f"{message} (value={value:.12g}, error estimate={estimate:.3g})")
        self.value = value
        self.estimate = estimate


class BudgetError(HermiteLabError, RuntimeError):
    """Estimated work exceeds the configured compute cap."""


class GridError(HermiteLabError, ValueError):
    """Required points are not on the lattice (interpolation is rejected)."""


class BlockIndexError(HermiteLabError, KeyError):
    """A block references an index with no supplied value."""


class WindowError(HermiteLabError, ValueError):
    """Requested window or tau is outside the admissible range."""


class ResolutionError(HermiteLabError, ValueError):
    """Path resolution is insufficient for the requested dyadic level."""


class DegenerateFitError(HermiteLabError, ValueError):
    """Regression input is degenerate (e.g. zero oscillation everywhere)."""


class ConfigError(HermiteLabError, ValueError):
    """Invalid or conflicting configuration."""


class MissingInputError(HermiteLabError, FileNotFoundError):
    """A required input artifact is missing."""
