"""Typed exceptions shared across the package."""


class BohmArrivalError(Exception):
    """Common base so callers can catch any package-specific failure."""


class DomainError(BohmArrivalError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularVelocityError(DomainError):
    """Velocity requested at (or below) the z-axis guard for the up-down case."""


class DivergentMomentError(BohmArrivalError, ValueError):
    """A moment that is provably infinite was requested."""


class QuadratureConvergenceError(BohmArrivalError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NoCrossingError(BohmArrivalError, RuntimeError):
    """Trajectory failed to reach the detector plane before the proven bound.

    The arrival time of every up-down trajectory is bounded, so hitting this
    signals an integrator bug, never physics.
    """


class TrajectoryStepError(BohmArrivalError, RuntimeError):
    """Step-size underflow or z-guard violation during trajectory integration."""


class EnsembleTrajectoryError(BohmArrivalError, RuntimeError):
    """A single trajectory of an ensemble failed; carries replay information."""

    def __init__(self, message, r0=None, seed=None, index=None):
        super().__init__(message)
        self.r0 = r0
        self.seed = seed
        self.index = index


class InsufficientSupportError(BohmArrivalError, ValueError):
    """Histogram lacks enough occupied bins near its upper edge for a fit."""
