"""Exception hierarchy shared by the solver modules."""


class PoroError(Exception):
    """Base class for all library errors."""


class ConfigError(PoroError):
    """Malformed or inconsistent problem configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MaterialError(PoroError):
    """Unphysical or degenerate material parameters."""


class NumericalError(PoroError):
    """A numerical kernel failed to meet its contract."""


class SingularSystemError(NumericalError):
    """The interface system is (near) singular."""

    def __init__(self, message: str, q=None):
        self.q = q
        super().__init__(message)


class PathTrackingError(NumericalError):
    """A Cagniard contour point could not be located."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach its tolerance."""


class DomainError(PoroError, ValueError):
    """Argument outside the domain of a path or window function."""
