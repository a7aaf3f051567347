"""Error types raised by the spectral package."""


class SpectralError(Exception):
    """Base class for all spectral package errors."""


class ConfigError(SpectralError, ValueError):
    """Invalid job configuration."""


class PoleError(SpectralError, ValueError):
    """A Gamma-type product hit a nonpositive integer argument."""


class UnsupportedPeriod(SpectralError, ValueError):
    """The closed-form path only covers periods 1 and 2."""


class FormMismatch(SpectralError, ValueError):
    """Ladder operator and state use different variable representations."""


class SingularPoint(SpectralError, ValueError):
    """Evaluation requested exactly at a divergent center."""


class SchemeMismatch(SpectralError, ValueError):
    """Quadrature weight exponent does not match the integrand."""


class NegativePowerError(SpectralError, ArithmeticError):
    """A quasi-polynomial operation produced a negative power of v."""


class ConvergenceError(SpectralError, RuntimeError):
    """An eigen-decomposition failed to converge."""


class NoConvergence(SpectralError, RuntimeError):
    """The Riccati solver did not reach its residual tolerance."""

    def __init__(self, message: str, solution=None):
        super().__init__(message)
        self.solution = solution


class AnsatzInsufficient(NoConvergence):
    """The residual plateaus above tolerance as the ansatz order grows."""
