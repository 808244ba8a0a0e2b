"""Exception types raised across the package.

Argument validation uses plain ``ValueError``; the classes here cover
numerical outcomes that callers may want to catch and inspect.
"""

from __future__ import annotations


class LogGarchError(Exception):
    """Base class for numerical failures in this package."""


class SingularMatrixError(LogGarchError):
    """A matrix required to be positive definite was not.

    Attributes
    ----------
    pivot : float
        Smallest Cholesky pivot encountered before the failure.
    """

    def __init__(self, message: str, pivot: float) -> None:
        super().__init__(f"{message} (smallest pivot {pivot:.6e})")
        self.pivot = float(pivot)


class PowerIterationError(LogGarchError):
    """Spectral radius estimate failed to settle within the iteration cap."""

    def __init__(self, iterations: int) -> None:
        super().__init__(
            f"power iteration did not converge within {iterations} iterations"
        )
        self.iterations = int(iterations)


class ProbeFailureError(LogGarchError):
    """A finite difference probe returned a non-finite value."""

    def __init__(self, coordinate: int, value: float) -> None:
        super().__init__(
            f"objective returned non-finite value {value!r} while probing "
            f"coordinate {coordinate}"
        )
        self.coordinate = int(coordinate)


class FilterDivergenceError(LogGarchError):
    """The volatility recursion produced a non-finite value."""

    def __init__(self, t: int) -> None:
        super().__init__(
            f"volatility recursion diverged at observation {t}; the series "
            "is incompatible with the supplied parameters"
        )
        self.t = int(t)


class SimulationDivergenceError(LogGarchError):
    """A simulated log variance path left the overflow guard band."""

    def __init__(self, t: int) -> None:
        super().__init__(
            f"simulated log variance exploded at step {t}; the parameters "
            "do not generate a stable path"
        )
        self.t = int(t)


class InvalidModelError(LogGarchError):
    """Model parameters violate a structural requirement of an operation."""


class NonConvergenceError(LogGarchError):
    """Optimizer exhausted its iteration budget on every restart."""

    def __init__(self, message: str, best=None) -> None:
        super().__init__(message)
        self.best = best


class DegenerateDifferentialError(LogGarchError):
    """Loss differential had zero variance, test statistic undefined."""


class IndeterminateCheckError(LogGarchError):
    """Every term of a diagnostic was floored, verdict would be meaningless."""
