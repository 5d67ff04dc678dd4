"""Exception types shared across the package."""


class GaugeIntError(Exception):
    """Base class for all errors raised by this package."""


class AssociationError(GaugeIntError):
    """A tag is not an admissible associated point of its cell."""


class IntegrandError(GaugeIntError):
    """The integrand raised, or returned a non-finite value."""


class NoConvergenceError(GaugeIntError):
    """Refinement or extrapolation hit its cap before reaching tolerance."""


class ResourceLimitError(GaugeIntError):
    """A construction exceeded its depth or size cap."""


class ScheduleError(GaugeIntError):
    """An increment schedule or time set is malformed or inconsistent."""


class DimensionCapError(GaugeIntError):
    """A direct multi-dimensional reduction beyond the supported cap."""


class GridTooCoarseError(GaugeIntError):
    """A slice grid cannot resolve the state it is asked to carry."""


class NoMFoundError(GaugeIntError):
    """No partial-sum index within the cap met the uniform closeness test."""
