"""Bohmian arrival-time statistics in a harmonic waveguide."""

from .errors import (
    BohmArrivalError,
    DivergentMomentError,
    DomainError,
    EnsembleTrajectoryError,
    InsufficientSupportError,
    NoCrossingError,
    QuadratureConvergenceError,
    SingularVelocityError,
    TrajectoryStepError,
)
from .model import ModelParams, SpinCase

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "SpinCase",
    "BohmArrivalError",
    "DomainError",
    "SingularVelocityError",
    "DivergentMomentError",
    "QuadratureConvergenceError",
    "NoCrossingError",
    "TrajectoryStepError",
    "EnsembleTrajectoryError",
    "InsufficientSupportError",
    "__version__",
]
