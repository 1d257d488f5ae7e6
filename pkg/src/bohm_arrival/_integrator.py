"""Numba kernels for up-down trajectory integration.

The autonomous system in the stretched time s = asinh(t) is

    dY/ds  = 1/xi - xi
    dxi/ds = omega * Y

with the conserved quantity H = ln(xi^2) - xi^2 - omega Y^2. A Dormand-
Prince 5(4) pair with its order-4 dense-output interpolant integrates each
trajectory; detector crossings are roots of xi(s) cosh(s) - L, bracketed on
quarter-step subintervals of the interpolant and refined by bisection.

Every trajectory is an independent pure computation; the ensemble kernel
writes results by index so the output is identical for any worker count.
"""

import math

import numpy as np
from numba import njit, prange

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# dense-output weights (Hairer's DOPRI5)
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

# status codes
OK = 0
NO_CROSSING = 1
STEP_FAILURE = 2
MAX_STEPS = 3

_MAX_STEPS_PER_TRAJ = 50_000_000
_EVENT_SUBDIVISIONS = 4
_EVENT_S_TOL = 1e-12


@njit(cache=True, inline="always")
def _dense(r1, r2, r3, r4, r5, theta):
    th1 = 1.0 - theta
    return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))


@njit(cache=True)
def _integrate_core(
    xi0,
    y0,
    omega,
    L,
    s_cap,
    rtol,
    atol,
    hmax,
    z_guard,
    s_out,
    xi_at,
    y_at,
):
    """Integrate one trajectory from s=0 to s_cap.

    Fills xi_at/y_at with dense-output values at the sorted abscissae s_out.
    Returns (status, tau, direction, n_cross, h_drift_abs, xi_min, xi_max,
    n_steps).
    """
    s = 0.0
    xi = xi0
    y = y0
    h0_ref = math.log(xi * xi) - xi * xi - omega * y * y
    h_drift = 0.0
    xi_min = xi
    xi_max = xi
    n_cross = 0
    tau = -1.0
    direction = 0
    n_steps = 0

    k1x = omega * y
    k1y = 1.0 / xi - xi

    g_prev = xi - L  # cosh(0) = 1
    h = min(hmax, 1e-3)

    iout = 0
    n_out = s_out.shape[0]
    while iout < n_out and s_out[iout] <= 0.0:
        xi_at[iout] = xi
        y_at[iout] = y
        iout += 1

    while s < s_cap:
        if n_steps >= _MAX_STEPS_PER_TRAJ:
            return (MAX_STEPS, tau, direction, n_cross, h_drift, xi_min, xi_max, n_steps)
        if h < 1e-14:
            return (STEP_FAILURE, tau, direction, n_cross, h_drift, xi_min, xi_max, n_steps)
        if h > s_cap - s:
            h = s_cap - s

        # stages
        x2 = xi + h * _A21 * k1x
        w2 = y + h * _A21 * k1y
        if x2 <= 0.0:
            h *= 0.5
            continue
        k2x = omega * w2
        k2y = 1.0 / x2 - x2

        x3 = xi + h * (_A31 * k1x + _A32 * k2x)
        w3 = y + h * (_A31 * k1y + _A32 * k2y)
        if x3 <= 0.0:
            h *= 0.5
            continue
        k3x = omega * w3
        k3y = 1.0 / x3 - x3

        x4 = xi + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        w4 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        if x4 <= 0.0:
            h *= 0.5
            continue
        k4x = omega * w4
        k4y = 1.0 / x4 - x4

        x5 = xi + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        w5 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        if x5 <= 0.0:
            h *= 0.5
            continue
        k5x = omega * w5
        k5y = 1.0 / x5 - x5

        x6 = xi + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
        w6 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
        if x6 <= 0.0:
            h *= 0.5
            continue
        k6x = omega * w6
        k6y = 1.0 / x6 - x6

        xi_new = xi + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
        y_new = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
        if xi_new <= 0.0 or not math.isfinite(xi_new) or not math.isfinite(y_new):
            h *= 0.5
            n_steps += 1
            continue
        k7x = omega * y_new
        k7y = 1.0 / xi_new - xi_new

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
        scale_x = atol + rtol * max(abs(xi), abs(xi_new))
        scale_y = atol + rtol * max(abs(y), abs(y_new))
        err = math.sqrt(0.5 * ((ex / scale_x) ** 2 + (ey / scale_y) ** 2))
        n_steps += 1

        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue

        # accepted: dense-output coefficients
        dx = xi_new - xi
        dy = y_new - y
        bsplx = h * k1x - dx
        bsply = h * k1y - dy
        r1x, r2x, r3x = xi, dx, bsplx
        r4x = dx - h * k7x - bsplx
        r5x = h * (_D1 * k1x + _D3 * k3x + _D4 * k4x + _D5 * k5x + _D6 * k6x + _D7 * k7x)
        r1y, r2y, r3y = y, dy, bsply
        r4y = dy - h * k7y - bsply
        r5y = h * (_D1 * k1y + _D3 * k3y + _D4 * k4y + _D5 * k5y + _D6 * k6y + _D7 * k7y)

        s_new = s + h

        # event scan on quarter-step subintervals
        g_a = g_prev
        for j in range(1, _EVENT_SUBDIVISIONS + 1):
            theta_b = j / _EVENT_SUBDIVISIONS
            sig_b = s + h * theta_b
            if j == _EVENT_SUBDIVISIONS:
                xi_b = xi_new
            else:
                xi_b = _dense(r1x, r2x, r3x, r4x, r5x, theta_b)
            if xi_b < xi_min:
                xi_min = xi_b
            if xi_b > xi_max:
                xi_max = xi_b
            g_b = xi_b * math.cosh(sig_b) - L
            if (g_a < 0.0 and g_b >= 0.0) or (g_a > 0.0 and g_b <= 0.0):
                lo = s + h * (j - 1) / _EVENT_SUBDIVISIONS
                hi = sig_b
                g_lo = g_a
                while hi - lo > _EVENT_S_TOL:
                    mid = 0.5 * (lo + hi)
                    xi_m = _dense(r1x, r2x, r3x, r4x, r5x, (mid - s) / h)
                    g_m = xi_m * math.cosh(mid) - L
                    if (g_m < 0.0) == (g_lo < 0.0):
                        lo = mid
                        g_lo = g_m
                    else:
                        hi = mid
                sig_root = 0.5 * (lo + hi)
                n_cross += 1
                if n_cross == 1:
                    tau = math.sinh(sig_root)
                    th = (sig_root - s) / h
                    xi_r = _dense(r1x, r2x, r3x, r4x, r5x, th)
                    y_r = _dense(r1y, r2y, r3y, r4y, r5y, th)
                    dzds = omega * y_r * math.cosh(sig_root) + xi_r * math.sinh(sig_root)
                    direction = 1 if dzds >= 0.0 else -1
            g_a = g_b

        # dense output at requested abscissae
        while iout < n_out and s_out[iout] <= s_new:
            th = (s_out[iout] - s) / h
            xi_at[iout] = _dense(r1x, r2x, r3x, r4x, r5x, th)
            y_at[iout] = _dense(r1y, r2y, r3y, r4y, r5y, th)
            iout += 1

        # diagnostics at the step endpoint
        h_val = math.log(xi_new * xi_new) - xi_new * xi_new - omega * y_new * y_new
        drift = abs(h_val - h0_ref)
        if drift > h_drift:
            h_drift = drift

        if xi_new * math.cosh(s_new) < z_guard:
            return (STEP_FAILURE, tau, direction, n_cross, h_drift, xi_min, xi_max, n_steps)

        s = s_new
        xi = xi_new
        y = y_new
        k1x = k7x
        k1y = k7y
        g_prev = g_a

        if err == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(hmax, h * fac)

    status = OK if n_cross > 0 else NO_CROSSING
    return (status, tau, direction, n_cross, h_drift, xi_min, xi_max, n_steps)


@njit(cache=True, parallel=True)
def _integrate_many(xi0s, y0s, omega, L, s_cap, rtol, atol, hmax, z_guard):
    n = xi0s.shape[0]
    status = np.empty(n, dtype=np.int64)
    taus = np.empty(n)
    dirs = np.empty(n, dtype=np.int64)
    ncross = np.empty(n, dtype=np.int64)
    hdrift = np.empty(n)
    ximin = np.empty(n)
    ximax = np.empty(n)
    empty = np.empty(0)
    for i in prange(n):
        dummy_xi = np.empty(0)
        dummy_y = np.empty(0)
        st, tau, d, nc, hd, xmn, xmx, _ = _integrate_core(
            xi0s[i], y0s[i], omega, L, s_cap, rtol, atol, hmax, z_guard,
            empty, dummy_xi, dummy_y,
        )
        status[i] = st
        taus[i] = tau
        dirs[i] = d
        ncross[i] = nc
        hdrift[i] = hd
        ximin[i] = xmn
        ximax[i] = xmx
    return status, taus, dirs, ncross, hdrift, ximin, ximax
