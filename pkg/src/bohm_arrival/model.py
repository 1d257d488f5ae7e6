"""Dimensionless physical model: parameters, wavefunctions, velocity fields.

Units are fixed by hbar = m = omega_z = 1, so lengths are measured in
sqrt(hbar / m omega_z) and times in 1/omega_z. The transverse trap frequency
``omega`` and the detector plane position ``L`` are the only physical knobs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, SingularVelocityError
from .special import erf

__all__ = [
    "ModelParams",
    "SpinCase",
    "psi_t",
    "axial_wavefunction",
    "born_density",
    "axial_density",
    "axial_cdf",
    "lambda_0",
    "velocity",
    "norm_const",
]

# Bohmian up-down trajectories provably stay off z = 0, so a velocity request
# below this guard signals integrator failure rather than physics.
Z_GUARD_DEFAULT = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Waveguide/trap configuration plus numerical tolerances."""

    omega: float
    detector_L: float
    ode_rtol: float = 1e-12
    ode_atol: float = 1e-14
    quad_tol: float = 1e-10
    z_guard: float = Z_GUARD_DEFAULT

    def __post_init__(self):
        if not self.omega > 0.0:
            raise DomainError("ModelParams: omega must be positive")
        # L > 1 keeps sqrt(L^2 - 1) real (the model assumes L >> 1)
        if not self.detector_L > 1.0:
            raise DomainError("ModelParams: detector_L must exceed 1")
        for name in ("ode_rtol", "ode_atol", "quad_tol", "z_guard"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"ModelParams: {name} must be positive")


class SpinCase(Enum):
    """The two prepared wavefunctions: spinor and spin vector are constant."""

    UP = "up"
    UPDOWN = "updown"

    @property
    def spinor(self) -> np.ndarray:
        if self is SpinCase.UP:
            return np.array([1.0, 0.0])
        return np.array([1.0, 1.0]) / math.sqrt(2.0)

    @property
    def spin_vector(self) -> np.ndarray:
        if self is SpinCase.UP:
            return np.array([0.0, 0.0, 0.5])
        return np.array([0.5, 0.0, 0.0])


def norm_const(omega: float) -> float:
    """Normalization A = sqrt(4 omega) / pi^(3/4) of the initial state."""
    return math.sqrt(4.0 * omega) / math.pi ** 0.75


def axial_wavefunction(z, t):
    """Axial factor z (1+it)^(-3/2) exp(-z^2 / 2(1+it)), zero for z <= 0."""
    z = np.asarray(z, dtype=float)
    ct = 1.0 + 1j * t
    val = z * ct ** -1.5 * np.exp(-z * z / (2.0 * ct))
    return np.where(z > 0.0, val, 0.0 + 0.0j)


def psi_t(r, t: float, p: ModelParams):
    """Spatial wavefunction at position(s) r = (..., 3) and time t >= 0.

    Both spin cases share this scalar factor; only the constant spinor
    differs. Exactly zero on and below the end face z <= 0.
    """
    if t < 0.0:
        raise DomainError("psi_t: t must be nonnegative")
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    transverse = np.exp(-0.5 * p.omega * (x * x + y * y + 2j * t))
    out = norm_const(p.omega) * axial_wavefunction(z, t) * transverse
    return out if out.ndim else complex(out)


def born_density(r0, p: ModelParams):
    """|Psi_0|^2, identical for both spin cases; zero for z <= 0."""
    r0 = np.asarray(r0, dtype=float)
    x, y, z = r0[..., 0], r0[..., 1], r0[..., 2]
    pref = 4.0 * p.omega / math.pi ** 1.5
    val = pref * z * z * np.exp(-z * z - p.omega * (x * x + y * y))
    out = np.where(z > 0.0, val, 0.0)
    return out if out.ndim else float(out)


def axial_density(z):
    """Marginal density of Z0: (4/sqrt(pi)) z^2 exp(-z^2) on z > 0."""
    z = np.asarray(z, dtype=float)
    out = np.where(z > 0.0, 4.0 / math.sqrt(math.pi) * z * z * np.exp(-z * z), 0.0)
    return out if out.ndim else float(out)


def axial_cdf(z):
    """CDF of the axial marginal: erf(z) - (2z/sqrt(pi)) exp(-z^2)."""
    z = np.asarray(z, dtype=float)
    out = erf(z) - 2.0 * z / math.sqrt(math.pi) * np.exp(-z * z)
    return out if np.ndim(out) else float(out)


def lambda_0(L: float) -> float:
    """Born weight of the slab 0 < z < L; normalizes the truncated ensemble."""
    return float(axial_cdf(L))


def velocity(r, t: float, spin: SpinCase, p: ModelParams) -> np.ndarray:
    """Bohmian velocity field (convective + spin term) for either spin case.

    Up:      (-omega y, omega x, t z / (1 + t^2))
    UpDown:  (0, 1/z - z/(1+t^2), omega y + t z / (1 + t^2))
    """
    x, y, z = (float(c) for c in np.asarray(r, dtype=float))
    conv = t * z / (1.0 + t * t)
    if spin is SpinCase.UP:
        return np.array([-p.omega * y, p.omega * x, conv])
    if z <= p.z_guard:
        raise SingularVelocityError(
            f"up-down velocity singular at z={z!r} (guard {p.z_guard})"
        )
    return np.array([0.0, 1.0 / z - z / (1.0 + t * t), p.omega * y + conv])
