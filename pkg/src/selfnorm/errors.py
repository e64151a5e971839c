"""Exception types shared across the package."""


class SelfnormError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SelfnormError):
    """A parameter is outside its documented domain."""


class ModelError(SelfnormError):
    """A model specification is internally inconsistent (e.g. a
    non-contractive recursion or a failed moment condition)."""


class SamplingError(SelfnormError):
    """A sampler could not produce draws (e.g. no exceedances above the
    requested threshold)."""


class DegeneratePathError(SelfnormError):
    """A statistic was requested on degenerate data (all zeros, or a
    degenerate limit)."""


class UnsupportedError(SelfnormError):
    """The requested combination is outside the supported domain and is
    rejected explicitly rather than silently extended."""


class NumericalError(SelfnormError):
    """Quadrature or special-function evaluation failed to reach the
    requested tolerance."""
