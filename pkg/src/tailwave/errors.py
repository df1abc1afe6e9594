"""Exception hierarchy shared by all tailwave modules."""


class TailwaveError(Exception):
    """Base class for library errors."""


class QuadratureError(TailwaveError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ProfileError(TailwaveError, ValueError):
    """Invalid initial-data profile (non-even, non-compact, bad parameters)."""


class DomainError(TailwaveError, ValueError):
    """Evaluation requested outside the domain where a formula is valid."""


class NonGenericData(TailwaveError):
    """Leading tail coefficient vanishes, so the attractor cannot be matched."""


class BlowupOrInstability(TailwaveError):
    """Evolution produced NaN/overflow or exceeded the amplitude guard.

    Attributes
    ----------
    time : float
        Simulation time at which the guard triggered.
    max_abs : float
        Largest |u| seen on the grid at that time.
    """

    def __init__(self, message: str, time: float, max_abs: float):
        super().__init__(message)
        self.time = time
        self.max_abs = max_abs


class CausalityError(TailwaveError, ValueError):
    """Outer boundary is not causally disconnected from the observers."""


class ConfigError(TailwaveError, ValueError):
    """Malformed or inconsistent configuration."""


class FitError(TailwaveError):
    """A fit or exponent estimate could not be carried out on the given data."""
