"""Real special functions and endpoint-singular quadrature.

Self-contained numerical primitives used throughout the package: the two
real branches of the Lambert W function on [-1/e, 0), the error function,
the confluent hypergeometric function 1F1 for the parameter regimes needed
by the arrival-time moments, and a tanh-sinh (double-exponential)
quadrature that tolerates algebraic singularities at both endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, QuadratureConvergenceError

__all__ = [
    "QuadratureResult",
    "lambert_w0",
    "lambert_wm1",
    "erf",
    "kummer_1f1",
    "integrate_singular",
]

_BRANCH_POINT = -math.exp(-1.0)  # -1/e, where W0 and W-1 meet at -1


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


# ---------------------------------------------------------------------------
# Lambert W, real branches on [-1/e, 0)
# ---------------------------------------------------------------------------

def _branch_series(p):
    # Expansion of W about the branch point, p = +/- sqrt(2(1 + e x)).
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))


def lambert_w0(x):
    """Principal branch W0 on [-1/e, 0], satisfying W e^W = x with W >= -1.

    Accepts scalars or numpy arrays. Halley iteration on the log form
    w + ln(-w) = ln(-x) with a branch-point series fallback; the round trip
    W e^W = x holds to ~1e-14 relative across the domain.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < _BRANCH_POINT * (1.0 + 4e-16)) or np.any(x_arr > 0.0):
        raise DomainError(f"lambert_w0: argument outside [-1/e, 0]")
    xc = np.clip(x_arr, _BRANCH_POINT, 0.0)

    w = np.empty_like(xc)
    p = np.sqrt(np.maximum(2.0 * (1.0 + np.e * xc), 0.0))

    near_branch = p < 0.01
    near_zero = xc > -1e-8
    general = ~(near_branch | near_zero)

    w[near_branch] = _branch_series(p[near_branch])
    # W0(x) = x - x^2 + 3x^3/2 - 8x^4/3 + O(x^5) near zero
    xz = xc[near_zero]
    w[near_zero] = xz * (1.0 + xz * (-1.0 + xz * (1.5 - xz * 8.0 / 3.0)))

    if np.any(general):
        xg = xc[general]
        wg = _branch_series(p[general])  # decent start everywhere in between
        ln_neg_x = np.log(-xg)
        for _ in range(6):
            # Newton on F(w) = w + ln(-w) - ln(-x); F' = 1 + 1/w
            f = wg + np.log(-wg) - ln_neg_x
            wg = wg - f * wg / (wg + 1.0)
            wg = np.clip(wg, -1.0, -1e-300)
        w[general] = wg

    _polish_residuals(w, xc, branch=0)
    return w if x_arr.ndim else float(w)


def lambert_wm1(x):
    """Lower branch W-1 on [-1/e, 0), satisfying W e^W = x with W <= -1.

    Handles arguments down to -1e-300 (W ~ -695) by iterating on the
    overflow-free log form w + ln(-w) = ln(-x).
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < _BRANCH_POINT * (1.0 + 4e-16)) or np.any(x_arr >= 0.0):
        raise DomainError("lambert_wm1: argument outside [-1/e, 0)")
    xc = np.clip(x_arr, _BRANCH_POINT, -0.0)

    w = np.empty_like(xc)
    p = np.sqrt(np.maximum(2.0 * (1.0 + np.e * xc), 0.0))

    near_branch = p < 0.01
    w[near_branch] = _branch_series(-p[near_branch])

    general = ~near_branch
    if np.any(general):
        xg = xc[general]
        l1 = np.log(-xg)          # <= -1
        l2 = np.log(-l1 + 1e-300)
        wg = l1 - l2 + l2 / l1    # classic asymptotic start
        wg = np.minimum(wg, -1.0 - 0.5 * p[general])
        for _ in range(8):
            f = wg + np.log(-wg) - l1
            wg = wg - f * wg / (wg + 1.0)
            wg = np.minimum(wg, -1.0)
        w[general] = wg

    _polish_residuals(w, xc, branch=-1)
    return w if x_arr.ndim else float(w)


def _polish_residuals(w, x, branch):
    """Bisection rescue for any element whose round trip is off."""
    with np.errstate(over="ignore", invalid="ignore"):
        resid = np.abs(w * np.exp(w) - x)
    bad = ~(resid <= 1e-12 * np.abs(x) + 1e-300)
    if not np.any(bad):
        return
    flat_w, flat_x = w.reshape(-1), x.reshape(-1)
    for i in np.flatnonzero(bad.reshape(-1)):
        flat_w[i] = _bisect_w(flat_x[i], branch)


def _bisect_w(x, branch):
    if x == 0.0:
        return 0.0
    if branch == 0:
        lo, hi = -1.0, 0.0       # w e^w increasing here
    else:
        l1 = math.log(-x)
        lo, hi = l1 - math.log(max(-l1, 1.0)) - 2.0, -1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = mid + math.log(-mid) - math.log(-x) if mid < 0 else -math.log(-x)
        # f increasing in w for w < -1, decreasing on (-1, 0)
        increasing = branch != 0
        if (fmid < 0.0) == increasing:
            lo = mid
        else:
            hi = mid
        if hi - lo <= abs(mid) * 1e-17:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Error function
# ---------------------------------------------------------------------------

def erf(x):
    """Error function; vectorized wrapper over the C library implementation."""
    x_arr = np.asarray(x, dtype=float)
    if x_arr.ndim == 0:
        return math.erf(float(x_arr))
    return np.vectorize(math.erf)(x_arr)


# ---------------------------------------------------------------------------
# Confluent hypergeometric function 1F1
# ---------------------------------------------------------------------------

_CERTIFIED_PAIRS = {(1.0, 2.5), (0.5, 2.5)}


def _series_1f1(a, b, x, max_terms=5000):
    term = 1.0
    total = 1.0
    comp = 0.0  # Kahan compensation
    for k in range(max_terms):
        term *= (a + k) * x / ((b + k) * (k + 1.0))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) <= 1e-17 * abs(total) and k > 2:
            return total
    raise QuadratureConvergenceError("1F1 series did not converge")


def _asymptotic_1f1_negx(a, b, x):
    # 1F1(a;b;x) ~ Gamma(b)/Gamma(b-a) (-x)^(-a) * sum_k (a)_k (a-b+1)_k / (k! (-x)^k)
    # for x -> -inf; truncated at the smallest term.
    z = -x
    pref = math.gamma(b) / math.gamma(b - a) * z ** (-a)
    term = 1.0
    total = 1.0
    for k in range(60):
        nxt = term * (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * z)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return pref * total


def kummer_1f1(a: float, b: float, x: float) -> float:
    """Confluent hypergeometric 1F1(a; b; x).

    Accuracy is certified only for (a,b) in {(1,5/2),(1/2,5/2)} at any
    x <= 0 (the regimes needed by the arrival-time moments) and for
    moderate |x| generally, where the plain Taylor series applies. Large
    negative arguments go through the Kummer transformation
    1F1(a;b;x) = e^x 1F1(b-a;b;-x), whose series has no cancellation.
    """
    if b <= 0.0 and b == math.floor(b):
        raise DomainError("kummer_1f1: b must not be a nonpositive integer")
    if x == 0.0:
        return 1.0
    if x > 0.0:
        if x > 600.0:
            raise DomainError("kummer_1f1: x > 600 not supported")
        return _series_1f1(a, b, x)
    # x < 0
    if -x <= 600.0:
        return math.exp(x) * _series_1f1(b - a, b, -x)
    if (float(a), float(b)) in _CERTIFIED_PAIRS:
        return _asymptotic_1f1_negx(a, b, x)
    raise DomainError(
        "kummer_1f1: accuracy not certified for these parameters at large negative x"
    )


# ---------------------------------------------------------------------------
# tanh-sinh quadrature
# ---------------------------------------------------------------------------

def integrate_singular(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    max_level: int = 12,
) -> QuadratureResult:
    """Tanh-sinh quadrature of f over (a, b).

    The integrand is called vectorized as ``f(x, da, db)`` where ``da = x - a``
    and ``db = b - x`` are supplied with full relative precision even when the
    node hugs an endpoint; integrands with endpoint singularities should be
    written in terms of the offsets. Converges double-exponentially for
    integrands with at worst algebraic endpoint singularities.
    """
    if not (a < b):
        raise DomainError("integrate_singular: requires a < b")
    h2 = 0.5 * (b - a)
    t_max = 6.11  # offsets reach ~1e-290 * (b - a); deep enough for x^(-1/2)

    value_prev = None
    evaluations = 0
    for level in range(2, max_level + 1):
        h = 0.5 ** level
        n = int(t_max / h)
        t = h * np.arange(-n, n + 1)
        w_arg = 0.5 * np.pi * np.sinh(t)
        aw = np.abs(w_arg)
        e2 = np.exp(-2.0 * aw)
        # 1 - |tanh(w)| and the sech^2 factor, overflow-free
        one_minus = 2.0 * e2 / (1.0 + e2)
        sech2 = 4.0 * e2 / (1.0 + e2) ** 2
        weight = h * h2 * (0.5 * np.pi * np.cosh(t)) * sech2

        near = h2 * one_minus            # offset to the nearer endpoint
        far = (b - a) - near
        da = np.where(w_arg < 0.0, near, far)
        db = np.where(w_arg < 0.0, far, near)
        x = np.where(w_arg < 0.0, a + near, b - near)

        ok = (da > 0.0) & (db > 0.0) & (weight > 0.0)
        vals = np.zeros_like(x)
        fx = np.asarray(f(x[ok], da[ok], db[ok]), dtype=float)
        vals[ok] = np.where(np.isfinite(fx), fx, 0.0)
        evaluations += int(ok.sum())

        value = float(np.sum(weight * vals))
        if value_prev is not None:
            err = abs(value - value_prev)
            if err <= tol * max(1.0, abs(value)):
                return QuadratureResult(value, err, evaluations)
        value_prev = value

    raise QuadratureConvergenceError(
        f"tanh-sinh failed to converge to tol={tol} after level {max_level}"
    )
