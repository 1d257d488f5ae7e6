"""Arrival-time law in the stiff-waveguide limit (omega -> infinity).

As omega grows, the azimuthal phase winding becomes infinitely fast and the
first arrival collapses onto t_s, the crossing time set by the outer
envelope radius xi_b alone. The distribution of xi_b over the Born ensemble
has the closed-form density

    Lambda(x) = (8 x / (pi lambda0)) (x^2 - 1) e^{-x^2}
                * int_{ell(x)}^{min(x, L)} dZ0 / sqrt(2 ln(Z0/x) + x^2 - Z0^2)

where ell(x) is the inner envelope radius at the same invariant level.
Pushing Lambda through tau = sqrt(L^2/x^2 - 1) gives the limiting density

    Pi_s(tau) = tau L (1 + tau^2)^{-3/2} Lambda(L / sqrt(1 + tau^2))

supported on (0, sqrt(L^2 - 1)), plus a point mass of weight
eta = int_L^inf Lambda at tau = 0 (envelopes already past the detector).
Omega cancels out of Lambda entirely: the transverse Born spread 1/(2 omega)
exactly compensates the omega in the invariant level.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, InsufficientSupportError
from .model import ModelParams, lambda_0
from .special import lambert_w0
from .trajectories import loggap_integral

__all__ = [
    "LimitingDistribution",
    "ell",
    "lambda_density",
    "eta",
    "pi_s",
    "limiting_distribution",
    "podal_angle_analytic",
    "podal_angle_estimate",
    "write_density_csv",
    "write_limit_json",
]

# envelopes closer than this to the fixed point use the harmonic phase value
_DEGENERATE_GAP = 1e-3
# e^{-x^2} decay makes the tail integral beyond L + 10 smaller than
# e^{-(L+10)^2}, far below double precision for any L >= 1
_ETA_TAIL = 10.0


def ell(x):
    """Inner envelope radius at the level of outer radius x >= 1.

    The unique root in (0, 1] of z^2 e^{-z^2} = x^2 e^{-x^2}, i.e.
    sqrt(-W0(-x^2 e^{-x^2})). Accepts scalars or arrays.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 1.0):
        raise DomainError("ell: argument must be >= 1")
    # log-space level avoids underflow of x^2 e^{-x^2} for large x
    C = 2.0 * np.log(x_arr) - x_arr * x_arr
    out = np.empty_like(x_arr)
    tiny = C < -690.0
    # below the W0 underflow floor, 2 ln l - l^2 = C gives l = e^{C/2} to
    # relative accuracy e^C
    out[tiny] = np.exp(C[tiny] / 2.0)
    rest = ~tiny
    if np.any(rest):
        out[rest] = np.sqrt(-lambert_w0(-np.exp(C[rest])))
    return out if x_arr.ndim else float(out)


def lambda_density(x: float, p: ModelParams) -> float:
    """Born-ensemble density of the outer envelope radius at x >= 1.

    Independent of omega. Evaluates the endpoint-singular radial integral
    between the two envelope roots; for nearly degenerate envelopes
    (x - 1 < 1e-3) the integral is replaced by its harmonic-well limit
    pi/sqrt(2), which the exact value approaches quadratically.
    """
    x = float(x)
    if x < 1.0:
        raise DomainError("lambda_density: argument must be >= 1")
    L = p.detector_L
    pref = 8.0 * x * (x * x - 1.0) * math.exp(-x * x) / (math.pi * lambda_0(L))
    if pref == 0.0:
        return 0.0
    if x - 1.0 < _DEGENERATE_GAP:
        return pref * math.pi / math.sqrt(2.0)
    lo = float(ell(x))
    hi = min(x, L)
    if hi <= lo:
        return 0.0
    C = 2.0 * math.log(x) - x * x
    return pref * loggap_integral(lo, hi, C, lo, x, tol=p.quad_tol)


def eta(p: ModelParams) -> float:
    """Weight of the delta(tau) atom: Born probability that xi_b > L."""
    L = p.detector_L
    if math.exp(-L * L) == 0.0:
        return 0.0
    val, _ = integrate.quad(
        lambda x: lambda_density(x, p), L, L + _ETA_TAIL,
        epsabs=1e-14, limit=200,
    )
    return min(max(val, 0.0), 1.0)


def pi_s(tau: float, p: ModelParams) -> float:
    """Density part of the limiting arrival law; the atom is not included.

    Zero at tau = 0 and for tau >= sqrt(L^2 - 1).
    """
    tau = float(tau)
    if tau < 0.0:
        raise DomainError("pi_s: tau must be nonnegative")
    L = p.detector_L
    if tau == 0.0 or tau * tau >= L * L - 1.0:
        return 0.0
    ct = 1.0 + tau * tau
    return tau * L * ct**-1.5 * lambda_density(L / math.sqrt(ct), p)


@dataclass(frozen=True)
class LimitingDistribution:
    """Limiting arrival law: continuous density on (0, sqrt(L^2-1)) plus
    an explicit atom of weight eta at tau = 0 (never folded into a bin)."""

    L: float
    eta: float
    density: Callable[[float], float]
    cdf: Callable

    @property
    def tau_max(self) -> float:
        return math.sqrt(self.L * self.L - 1.0)


def limiting_distribution(p: ModelParams, grid_points: int = 400) -> LimitingDistribution:
    """Build the limiting law with a cached CDF.

    The CDF is cumulative adaptive quadrature of the density on a monotone
    tau grid, linearly interpolated in between; the atom shifts the whole
    curve up by eta. The grid is computed once at construction
    (initialize-once/read-many).
    """
    L = p.detector_L
    if L <= 1.0:
        raise DomainError("limiting_distribution: detector_L must exceed 1")
    atom = eta(p)
    tau_max = math.sqrt(L * L - 1.0)
    grid = np.linspace(0.0, tau_max, grid_points + 1)
    seg = np.empty(grid_points)
    for i in range(grid_points):
        seg[i], _ = integrate.quad(
            lambda t: pi_s(t, p), grid[i], grid[i + 1],
            epsabs=1e-10 / grid_points, epsrel=1e-10, limit=100,
        )
    cum = np.concatenate([[0.0], np.cumsum(seg)]) + atom

    def cdf(tau):
        t = np.asarray(tau, dtype=float)
        out = np.where(t < 0.0, 0.0, np.interp(t, grid, cum, right=cum[-1]))
        return out if t.ndim else float(out)

    return LimitingDistribution(
        L=L, eta=atom, density=lambda t: pi_s(t, p), cdf=cdf
    )


def podal_angle_analytic(p: ModelParams) -> float:
    """Angle (radians) between the limiting density and the time axis at the
    upper support edge sqrt(L^2 - 1); large-L asymptotic arctan(4.16 / L^2)."""
    return math.atan(4.16 / p.detector_L**2)


def podal_angle_estimate(hist, k: int = 5) -> float:
    """Podal angle from an arrival-time histogram (edges, counts).

    Fits a least-squares line to the normalized bin heights of the last k
    nonempty bins and returns arctan(-slope): the descent angle of the
    density at its foot.
    """
    edges, counts = hist
    edges = np.asarray(edges, dtype=float)
    counts = np.asarray(counts, dtype=float)
    nonempty = np.flatnonzero(counts > 0)
    if nonempty.size < k:
        raise InsufficientSupportError(
            f"podal_angle_estimate: need {k} nonempty bins, have {nonempty.size}"
        )
    idx = nonempty[-k:]
    widths = np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    dens = counts / (counts.sum() * widths)
    slope = np.polyfit(centers[idx], dens[idx], 1)[0]
    return math.atan(-slope)


def write_density_csv(dist: LimitingDistribution, taus, path) -> None:
    """Write (tau, density) rows on a user grid; the atom is not binned."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "pi_s"])
        for t in np.asarray(taus, dtype=float):
            w.writerow([repr(float(t)), repr(dist.density(float(t)))])


def write_limit_json(dist: LimitingDistribution, p: ModelParams, path) -> None:
    doc = {
        "schema": 1,
        "L": dist.L,
        "eta": dist.eta,
        "tau_max_limit": dist.tau_max,
        "gamma_analytic": podal_angle_analytic(p),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
