"""Bohmian trajectories and first-arrival times for both spin cases.

Spin-up motion is closed form: a circle in the transverse plane and
Z(t) = Z0 sqrt(1 + t^2) axially, so the arrival time at the plane z = L is
tau = sqrt((L/Z0)^2 - 1).

The up-down case decouples from x and, in the stretched time s = asinh(t)
with xi = z / sqrt(1 + t^2), reduces to the autonomous system

    dxi/ds = omega * y,     dy/ds = 1/xi - xi,

which conserves H = ln(xi^2) - xi^2 - omega y^2 = ln(-g). The trajectory
oscillates between envelope radii xi_s <= xi <= xi_b given by the two real
branches of Lambert W at g, which sandwich the arrival time between
explicit bounds. Numerical integration uses an embedded Runge-Kutta
kernel; an independent quadrature oracle reconstructs xi(s) and the
arrival time from the conserved quantity alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._integrator import MAX_STEPS, NO_CROSSING, STEP_FAILURE, _integrate_core
from .errors import DomainError, NoCrossingError, TrajectoryStepError
from .model import ModelParams
from .special import integrate_singular, lambert_w0, lambert_wm1

__all__ = [
    "Envelope",
    "CrossingEvent",
    "TrajectoryDiagnostics",
    "UpDownState",
    "spin_up_position",
    "spin_up_arrival",
    "envelope",
    "envelope_arrays",
    "default_s_cap",
    "integrate_updown",
    "updown_path",
    "updown_smallomega_position",
    "loggap_integral",
    "quadrature_xi",
    "quadrature_arrival",
    "half_period_phase",
]

# one extra oscillation period past the guaranteed-crossing bound, plus margin
_CAP_MARGIN = 1.05

# below this exponent of the conserved level, -g underflows to 0.0
_G_UNDERFLOW_LEVEL = -745.0


@dataclass(frozen=True)
class Envelope:
    """Per-initial-condition invariants of the up-down oscillation.

    g = -z0^2 exp(-z0^2 - omega y0^2) in [-1/e, 0); the turning radii are
    xi_s = sqrt(-W0(g)) <= 1 <= xi_b = sqrt(-W-1(g)), and the first arrival
    is bracketed by t_s <= tau <= t_b. When g underflows to -0.0, xi_s is
    reported as the 0 sentinel and t_b as +inf.
    """

    g: float
    xi_s: float
    xi_b: float
    t_s: float
    t_b: float

    def tau_ceiling(self, omega: float) -> float:
        """Hard upper bound: one full oscillation past the lower bound."""
        arg = 2.0 * math.pi / math.sqrt(omega) + math.asinh(self.t_s)
        ceiling = math.sinh(arg) if arg < 700.0 else math.inf
        return min(self.t_b, ceiling)


@dataclass(frozen=True)
class CrossingEvent:
    """One detector crossing of one trajectory."""

    t: float
    index: int            # which crossing (1 = first)
    direction: int        # sign of dz/dt at the crossing


@dataclass(frozen=True)
class TrajectoryDiagnostics:
    """Integration health data reported alongside a crossing."""

    n_crossings: int      # crossings found up to the integration cap
    h_drift: float        # max |H(s) - H(0)| over accepted steps
    xi_min: float
    xi_max: float
    n_steps: int


@dataclass(frozen=True)
class UpDownState:
    """Dense trajectory samples for the up-down spin case (x is constant)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    xi: np.ndarray
    h_invariant: np.ndarray


# ---------------------------------------------------------------------------
# spin-up: closed form
# ---------------------------------------------------------------------------

def spin_up_position(r0, t, p: ModelParams) -> np.ndarray:
    """Exact spin-up trajectory: transverse circle, axial spreading."""
    x0, y0, z0 = (float(c) for c in np.asarray(r0, dtype=float))
    t = np.asarray(t, dtype=float)
    c, s = np.cos(p.omega * t), np.sin(p.omega * t)
    out = np.stack(
        [x0 * c - y0 * s, x0 * s + y0 * c, z0 * np.sqrt(1.0 + t * t)], axis=-1
    )
    return out


def spin_up_arrival(z0: float, L: float) -> float:
    """Arrival time sqrt((L/z0)^2 - 1); requires 0 < z0 < L."""
    if not (0.0 < z0 < L):
        raise DomainError(f"spin_up_arrival: z0={z0!r} outside (0, L)")
    return math.sqrt((L / z0) ** 2 - 1.0)


# ---------------------------------------------------------------------------
# up-down: envelope bounds from the conserved quantity
# ---------------------------------------------------------------------------

def _log_level(z0, y0, omega):
    # C = ln(-g) with g = -z0^2 exp(-z0^2 - omega y0^2); always <= -1
    return 2.0 * np.log(z0) - z0 * z0 - omega * y0 * y0


def envelope_arrays(y0, z0, p: ModelParams):
    """Vectorized envelope: returns arrays (g, xi_s, xi_b, t_s, t_b)."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    if np.any(z0 <= 0.0):
        raise DomainError("envelope: requires z0 > 0")
    L = p.detector_L
    C = np.minimum(_log_level(z0, y0, p.omega), -1.0)
    with np.errstate(under="ignore"):
        g = -np.exp(C)

    xi_s = np.empty_like(C)
    xi_b = np.empty_like(C)

    degenerate = C >= -1.0 + 1e-12       # fixed point xi = 1
    underflow = C < _G_UNDERFLOW_LEVEL   # g rounds to -0.0: 0 sentinel
    tiny = (C < -690.0) & ~underflow     # representable but beyond W-1 range
    normal = ~(degenerate | tiny | underflow)

    xi_s[degenerate] = 1.0
    xi_b[degenerate] = 1.0
    xi_s[underflow] = 0.0

    if np.any(normal):
        gn = g[normal]
        xi_s[normal] = np.sqrt(-lambert_w0(gn))
        xi_b[normal] = np.sqrt(-lambert_wm1(gn))

    if np.any(tiny):
        ct = C[tiny]
        # W0(g) = g (1 + O(g)): relative error below 1e-290 here
        xi_s[tiny] = np.exp(0.5 * ct)

    deep = tiny | underflow
    if np.any(deep):
        cd = C[deep]
        # Newton on w + ln(-w) = C for the lower branch
        w = cd - np.log(-cd)
        for _ in range(6):
            w = w - (w + np.log(-w) - cd) * w / (w + 1.0)
        xi_b[deep] = np.sqrt(-w)

    with np.errstate(over="ignore", divide="ignore"):
        ratio_up = L / xi_b
        t_s = np.where(
            xi_b >= L, 0.0, np.sqrt(np.maximum(ratio_up * ratio_up - 1.0, 0.0))
        )
        ratio_dn = np.where(xi_s > 0.0, L / xi_s, np.inf)
        t_b = np.where(
            np.isfinite(ratio_dn) & (ratio_dn < 1e150),
            np.sqrt(np.maximum(ratio_dn * ratio_dn - 1.0, 0.0)),
            np.inf,
        )
    return g, xi_s, xi_b, t_s, t_b


def envelope(y0: float, z0: float, p: ModelParams) -> Envelope:
    """Envelope invariants and arrival bounds for one initial condition."""
    g, xi_s, xi_b, t_s, t_b = envelope_arrays(y0, z0, p)
    return Envelope(float(g[0]), float(xi_s[0]), float(xi_b[0]),
                    float(t_s[0]), float(t_b[0]))


def default_s_cap(p: ModelParams) -> float:
    """Integration horizon in s: margin past the worst-case arrival bound.

    The latest possible first crossing over the slab 0 < z0 < L corresponds
    to t_s = sqrt(L^2 - 1) plus one oscillation period.
    """
    arg = 2.0 * math.pi / math.sqrt(p.omega) + math.asinh(
        math.sqrt(p.detector_L**2 - 1.0)
    )
    if arg > 690.0:
        return math.log(_CAP_MARGIN) + arg  # asinh(x) ~ ln(2x) regime
    return math.asinh(_CAP_MARGIN * math.sinh(arg))


# ---------------------------------------------------------------------------
# up-down: numerical integration
# ---------------------------------------------------------------------------

def _run_core(r0, p: ModelParams, s_out=None, s_cap=None, tol=None):
    x0, y0, z0 = (float(c) for c in np.asarray(r0, dtype=float))
    if not (p.z_guard < z0 < p.detector_L):
        raise DomainError(f"integrate_updown: z0={z0!r} outside (z_guard, L)")
    if s_cap is None:
        s_cap = default_s_cap(p)
    if s_out is None:
        s_out = np.empty(0)
    rtol = p.ode_rtol if tol is None else float(tol)
    atol = min(p.ode_atol, 0.01 * rtol)
    xi_at = np.empty_like(s_out)
    y_at = np.empty_like(s_out)
    hmax = min(1.0, math.pi / (8.0 * math.sqrt(p.omega)))
    status, tau, direction, n_cross, h_drift, xi_min, xi_max, n_steps = (
        _integrate_core(
            z0, y0, p.omega, p.detector_L, s_cap, rtol, atol,
            hmax, p.z_guard, s_out, xi_at, y_at,
        )
    )
    if status in (STEP_FAILURE, MAX_STEPS):
        raise TrajectoryStepError(
            f"integration failed (status {status}) at r0={tuple(np.asarray(r0))}"
        )
    diag = TrajectoryDiagnostics(int(n_cross), h_drift, xi_min, xi_max, int(n_steps))
    return status, tau, direction, diag, xi_at, y_at


def integrate_updown(
    r0, p: ModelParams, tol: float | None = None, s_cap: float | None = None
) -> tuple[CrossingEvent, TrajectoryDiagnostics]:
    """First arrival of one up-down trajectory; raises if it never crosses."""
    status, tau, direction, diag, _, _ = _run_core(r0, p, s_cap=s_cap, tol=tol)
    if status == NO_CROSSING:
        raise NoCrossingError(
            f"no detector crossing before the integration cap at r0={tuple(np.asarray(r0))}"
        )
    return CrossingEvent(tau, 1, int(direction)), diag


def updown_path(r0, p: ModelParams, t_grid) -> UpDownState:
    """Dense up-down trajectory sampled at the requested (sorted) times."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0.0) or np.any(t_grid < 0.0):
        raise DomainError("updown_path: t_grid must be nonnegative and sorted")
    s_out = np.arcsinh(t_grid)
    s_cap = max(default_s_cap(p), float(s_out[-1]) if s_out.size else 0.0)
    _, _, _, _, xi_at, y_at = _run_core(r0, p, s_out=s_out, s_cap=s_cap)
    x0 = float(np.asarray(r0, dtype=float)[0])
    stretch = np.sqrt(1.0 + t_grid * t_grid)
    z = xi_at * stretch
    h = np.log(xi_at * xi_at) - xi_at * xi_at - p.omega * y_at * y_at
    return UpDownState(
        t=t_grid, x=np.full_like(t_grid, x0), y=y_at, z=z, xi=xi_at, h_invariant=h
    )


def updown_smallomega_position(r0, t) -> np.ndarray:
    """Closed-form omega -> 0 limit of the up-down trajectory.

    With the trap term negligible the axial motion matches spin-up,
    Z = Z0 sqrt(1+t^2), while y drifts as (1/Z0 - Z0) asinh(t).
    """
    x0, y0, z0 = (float(c) for c in np.asarray(r0, dtype=float))
    t = np.asarray(t, dtype=float)
    y = y0 + (1.0 / z0 - z0) * np.arcsinh(t)
    z = z0 * np.sqrt(1.0 + t * t)
    return np.stack([np.full_like(t, x0), y, z], axis=-1)


# ---------------------------------------------------------------------------
# up-down: quadrature oracle built on the conserved quantity
# ---------------------------------------------------------------------------

def loggap_integral(
    lo: float,
    hi: float,
    C: float,
    root_lo: float,
    root_hi: float,
    tol: float = 1e-11,
) -> float:
    """Integral of 1/sqrt(ln(xi^2) - xi^2 - C) over [lo, hi].

    root_lo and root_hi are the two zeros of the radicand (the envelope
    radii). The radicand is expanded exactly about the nearer root,
    F(r + d) = 2 log1p(d/r) - d (2r + d), which keeps full precision in the
    inverse-square-root endpoint singularities.
    """
    if not (root_lo <= lo < hi <= root_hi):
        raise DomainError("loggap_integral: require root_lo <= lo < hi <= root_hi")
    off_lo = lo - root_lo
    off_hi = root_hi - hi

    def integrand(x, da, db):
        d_lo = da + off_lo
        d_hi = db + off_hi
        # the expansion about the far root may hit log1p(-1); the near-root
        # branch is always the one selected there
        with np.errstate(divide="ignore", invalid="ignore"):
            f_lo = 2.0 * np.log1p(d_lo / root_lo) - d_lo * (2.0 * root_lo + d_lo)
            f_hi = 2.0 * np.log1p(-d_hi / root_hi) + d_hi * (2.0 * root_hi - d_hi)
            rad = np.maximum(np.where(d_lo <= d_hi, f_lo, f_hi), 0.0)
            return 1.0 / np.sqrt(rad)

    return integrate_singular(integrand, lo, hi, tol=tol).value


def half_period_phase(y0: float, z0: float, p: ModelParams) -> float:
    """Phase integral between the envelope radii; sqrt(omega) * half-period."""
    env = envelope(y0, z0, p)
    if env.xi_b - env.xi_s < 1e-9:
        return math.pi / math.sqrt(2.0)  # harmonic limit at the fixed point
    C = float(_log_level(np.asarray(z0), np.asarray(y0), p.omega))
    return loggap_integral(env.xi_s, env.xi_b, C, env.xi_s, env.xi_b)


class _PhaseClock:
    """Maps s to xi(s) by inverting the phase integral arc by arc."""

    def __init__(self, env: Envelope, y0, z0, p: ModelParams):
        self.p = p
        self.z0 = float(z0)
        self.env = env
        self.C = float(
            _log_level(np.asarray(float(z0)), np.asarray(float(y0)), p.omega)
        )
        self.degenerate = env.xi_b - env.xi_s < 1e-9
        if self.degenerate:
            return
        sw = math.sqrt(p.omega)
        a, b = env.xi_s, env.xi_b
        self.half_period = loggap_integral(a, b, self.C, a, b) / sw
        # initial direction of xi: sign of omega*y0, or of the restoring
        # force 1/xi - xi when starting at rest
        d0 = math.copysign(1.0, y0) if y0 != 0.0 else math.copysign(1.0, 1.0 - z0)
        self.d0 = d0
        if d0 > 0:
            self.first_arc = (
                loggap_integral(self.z0, b, self.C, a, b) / sw if self.z0 < b else 0.0
            )
        else:
            self.first_arc = (
                loggap_integral(a, self.z0, self.C, a, b) / sw if self.z0 > a else 0.0
            )

    def _phase_from_min(self, xi):
        a, b = self.env.xi_s, self.env.xi_b
        if xi <= a:
            return 0.0
        if xi >= b:
            return self.half_period * math.sqrt(self.p.omega)
        return loggap_integral(a, xi, self.C, a, b)

    def xi(self, s: float) -> float:
        if self.degenerate:
            return self.z0
        a, b = self.env.xi_s, self.env.xi_b
        sw = math.sqrt(self.p.omega)
        if s <= 0.0:
            return self.z0
        if s < self.first_arc:
            phase0 = self._phase_from_min(self.z0)
            target = phase0 + self.d0 * s * sw
        else:
            u = s - self.first_arc
            k = int(u // self.half_period)
            r = u - k * self.half_period
            # after the first arc the trajectory sits at a turning point;
            # arcs alternate direction starting opposite to d0
            d = -self.d0 if k % 2 == 0 else self.d0
            start = b if d < 0 else a
            phase0 = self._phase_from_min(start)
            target = phase0 + d * r * sw
        target = min(max(target, 0.0), self.half_period * sw)

        def q(xi):
            return self._phase_from_min(xi) - target

        lo, hi = a * (1.0 + 1e-15), b * (1.0 - 1e-15)
        if q(lo) >= 0.0:
            return a
        if q(hi) <= 0.0:
            return b
        return float(brentq(q, lo, hi, xtol=1e-14, rtol=1e-14))


def quadrature_xi(env: Envelope, y0: float, z0: float, p: ModelParams, s) -> float:
    """xi(s) reconstructed from the conserved quantity by phase inversion.

    ODE-free: counts completed half-cycles of the oscillation and inverts
    the partial phase integral by bisection. Intended as an independent
    oracle for the Runge-Kutta path.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0.0):
        raise DomainError("quadrature_xi: s must be nonnegative")
    clock = _PhaseClock(env, y0, z0, p)
    out = np.array([clock.xi(float(v)) for v in s_arr])
    return out if np.ndim(s) else float(out[0])


def quadrature_arrival(r0, p: ModelParams, samples_per_arc: int = 16) -> float:
    """ODE-free arrival time from the conserved quantity alone.

    Reconstructs xi(s) by inverting the phase integral, then locates the
    first root of xi(s) cosh(s) - L by bracketing and bisection over each
    monotone arc. Independent of the Runge-Kutta path; used as an oracle.
    """
    x0, y0, z0 = (float(c) for c in np.asarray(r0, dtype=float))
    if not (0.0 < z0 < p.detector_L):
        raise DomainError("quadrature_arrival: z0 outside (0, L)")
    env = envelope(y0, z0, p)
    clock = _PhaseClock(env, y0, z0, p)
    L = p.detector_L

    if clock.degenerate:
        return math.sqrt((L / z0) ** 2 - 1.0)

    def gap(s):
        return clock.xi(s) * math.cosh(s) - L

    s_cap = default_s_cap(p)
    # arc boundaries: first turning point, then every half period
    bounds = [0.0]
    s_turn = clock.first_arc
    while s_turn < s_cap:
        bounds.append(s_turn)
        s_turn += clock.half_period
    bounds.append(s_cap)

    g_prev = gap(0.0)
    s_prev = 0.0
    for k in range(1, len(bounds)):
        lo_b, hi_b = bounds[k - 1], bounds[k]
        for s in np.linspace(lo_b, hi_b, samples_per_arc + 1)[1:]:
            g = gap(float(s))
            if g_prev < 0.0 <= g:
                root = brentq(gap, s_prev, float(s), xtol=1e-13)
                return math.sinh(root)
            s_prev, g_prev = float(s), g
    raise NoCrossingError(
        f"quadrature oracle found no crossing before the cap at r0={tuple(np.asarray(r0))}"
    )
