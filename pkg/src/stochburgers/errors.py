"""Exception hierarchy shared across the package."""


class StochBurgersError(Exception):
    """Base class for every error raised by the library."""


class SizingError(StochBurgersError, ValueError):
    """Grid too small for the requested stencil or operation."""


class GridMismatchError(StochBurgersError, ValueError):
    """Two objects that must share a lattice do not."""


class DomainError(StochBurgersError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigurationError(StochBurgersError, ValueError):
    """Invalid scenario configuration or violated stability contract."""


class NumericalFailure(StochBurgersError, RuntimeError):
    """A solver produced non-finite or sign-violating values."""


class SingularityError(StochBurgersError, ZeroDivisionError):
    """A denominator came within tolerance of zero."""


class NoSolutionError(StochBurgersError, ValueError):
    """A linear coefficient system is singular and inconsistent."""


class MissingPartError(StochBurgersError, ValueError):
    """A decomposition part needed by a residual check is absent."""
