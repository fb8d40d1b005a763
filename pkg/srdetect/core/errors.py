"""Exceptions for numeric failures.

Domain violations (a threshold outside its admissible range, a head start
above the threshold) are plain ``ValueError``. Everything here means the
inputs were admissible but the computation could not deliver a trustworthy
answer; the CLI maps these to exit code 2, except ``AcceptanceError``
which maps to 3.
"""


class NumericalError(Exception):
    """Base class for solver, eigen-solver and calibration failures."""


class SolverError(NumericalError):
    """Nyström system singular, ill-conditioned or with a large residual."""


class ConvergenceError(NumericalError):
    """An iteration did not reach its tolerance within the iteration cap."""

    def __init__(self, message: str, *, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class DensityError(NumericalError):
    """A computed probability density went negative beyond tolerance."""


class CalibrationError(NumericalError):
    """A threshold or head start could not be calibrated to its target."""


class AcceptanceError(Exception):
    """A reproduced reference number deviates beyond its tolerance."""
