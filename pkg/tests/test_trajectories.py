import math

import mpmath
import numpy as np
import pytest

from bohm_arrival.errors import DomainError, NoCrossingError
from bohm_arrival.model import ModelParams
from bohm_arrival.trajectories import (
    default_s_cap,
    envelope,
    envelope_arrays,
    half_period_phase,
    integrate_updown,
    loggap_integral,
    quadrature_arrival,
    quadrature_xi,
    spin_up_arrival,
    spin_up_position,
    updown_path,
    updown_smallomega_position,
)

P = ModelParams(omega=2.0, detector_L=5.0)


def bisect_gap_root(C, lo, hi, iters=200):
    """Independent root of 2 ln(xi) - xi^2 - C = 0 on a monotone bracket."""
    f = lambda x: 2.0 * math.log(x) - x * x - C
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) <= 0.0) == (flo <= 0.0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestSpinUp:
    def test_position_rotation_and_spreading(self):
        r0 = (1.0, 0.0, 0.7)
        t = math.pi / (2.0 * P.omega)  # quarter turn
        pos = spin_up_position(r0, t, P)
        assert pos[0] == pytest.approx(0.0, abs=1e-12)
        assert pos[1] == pytest.approx(1.0, rel=1e-12)
        assert pos[2] == pytest.approx(0.7 * math.sqrt(1.0 + t * t), rel=1e-14)

    def test_arrival_is_root_of_z_equals_L(self):
        for z0 in [0.2, 1.0, 3.3]:
            tau = spin_up_arrival(z0, P.detector_L)
            assert z0 * math.sqrt(1.0 + tau * tau) == pytest.approx(
                P.detector_L, rel=1e-14
            )

    def test_half_detector_start(self):
        assert spin_up_arrival(P.detector_L / 2.0, P.detector_L) == pytest.approx(
            math.sqrt(3.0), rel=1e-14
        )

    def test_arrival_domain(self):
        with pytest.raises(DomainError):
            spin_up_arrival(0.0, 5.0)
        with pytest.raises(DomainError):
            spin_up_arrival(6.0, 5.0)


class TestEnvelope:
    def test_roots_against_bisection(self):
        env = envelope(0.1, 0.5, P)
        C = 2.0 * math.log(0.5) - 0.25 - P.omega * 0.01
        lo = bisect_gap_root(C, 1e-8, 1.0)
        hi = bisect_gap_root(C, 1.0, 10.0)
        assert env.xi_s == pytest.approx(lo, rel=1e-10)
        assert env.xi_b == pytest.approx(hi, rel=1e-10)
        assert env.g == pytest.approx(-math.exp(C), rel=1e-13)
        # the radicand really vanishes at the reported radii
        for r in (env.xi_s, env.xi_b):
            assert 2.0 * math.log(r) - r * r - C == pytest.approx(0.0, abs=1e-12)

    def test_rest_start_makes_z0_an_extremum(self):
        env = envelope(0.0, 0.5, P)
        assert env.xi_s == pytest.approx(0.5, rel=1e-13)
        assert env.g == pytest.approx(-0.25 * math.exp(-0.25), rel=1e-14)

    def test_contains_initial_radius_when_at_rest(self):
        for z0 in [0.3, 0.9, 1.7]:
            env = envelope(0.0, z0, P)
            assert env.xi_s <= z0 + 1e-12
            assert env.xi_b >= z0 - 1e-12

    def test_fixed_point(self):
        env = envelope(0.0, 1.0, P)
        assert env.xi_s == pytest.approx(1.0)
        assert env.xi_b == pytest.approx(1.0)
        assert env.g == pytest.approx(-math.exp(-1.0), rel=1e-13)
        assert env.t_s == pytest.approx(math.sqrt(P.detector_L**2 - 1.0), rel=1e-12)
        assert env.t_b == pytest.approx(env.t_s, rel=1e-12)

    def test_extreme_underflow_level(self):
        # z0 deep in the tail: -g underflows to 0.0; sentinel contract
        g, xi_s, xi_b, t_s, t_b = envelope_arrays(
            np.array([5.0]), np.array([30.0]), ModelParams(omega=2.0, detector_L=50.0)
        )
        assert g[0] == 0.0
        assert xi_s[0] == 0.0
        assert xi_b[0] > 1.0
        assert t_b[0] == math.inf
        assert t_s[0] >= 0.0

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(5)
        z0 = rng.uniform(0.1, 3.0, size=50)
        y0 = rng.normal(0.0, 0.5, size=50)
        g, xs, xb, ts, tb = envelope_arrays(y0, z0, P)
        for i in range(0, 50, 7):
            env = envelope(y0[i], z0[i], P)
            assert g[i] == env.g
            assert xs[i] == env.xi_s and xb[i] == env.xi_b
            assert ts[i] == env.t_s and tb[i] == env.t_b
            assert env.t_s <= env.t_b


class TestLogGapIntegral:
    def test_against_mpmath(self):
        C = -2.0
        lo = bisect_gap_root(C, 1e-8, 1.0)
        hi = bisect_gap_root(C, 1.0, 10.0)
        got = loggap_integral(lo, hi, C, lo, hi)
        with mpmath.workdps(40):
            f = lambda x: 2 * mpmath.log(x) - x * x - C
            lo_hp = mpmath.findroot(f, lo)
            hi_hp = mpmath.findroot(f, hi)
            expected = float(
                mpmath.quadts(lambda x: 1.0 / mpmath.sqrt(f(x)), [lo_hp, hi_hp])
            )
        assert got == pytest.approx(expected, rel=1e-9)

    def test_partial_interval(self):
        C = -3.0
        lo = bisect_gap_root(C, 1e-8, 1.0)
        hi = bisect_gap_root(C, 1.0, 10.0)
        mid = 0.5 * (lo + hi)
        total = loggap_integral(lo, hi, C, lo, hi)
        left = loggap_integral(lo, mid, C, lo, hi)
        right = loggap_integral(mid, hi, C, lo, hi)
        assert left + right == pytest.approx(total, rel=1e-9)

    def test_half_period_phase_bounded_by_pi(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            z0 = rng.uniform(0.05, 3.0)
            y0 = rng.normal(0.0, 0.7)
            phase = half_period_phase(y0, z0, P)
            assert phase <= math.pi + 1e-9
            assert phase > 0.0

    def test_harmonic_limit(self):
        # shallow oscillation about xi = 1: the well 2 ln(xi) - xi^2 has
        # curvature -4 there, so the phase integral tends to pi / sqrt(2)
        phase = half_period_phase(0.0, 1.0 + 1e-5, P)
        assert phase == pytest.approx(math.pi / math.sqrt(2.0), rel=1e-3)


class TestUpDownIntegration:
    def test_fixed_point_trajectory(self):
        ev, diag = integrate_updown((0.2, 0.0, 1.0), P)
        assert ev.t == pytest.approx(math.sqrt(P.detector_L**2 - 1.0), rel=1e-9)
        assert ev.index == 1
        assert ev.direction == 1
        assert diag.h_drift < 1e-10

    def test_invariant_drift_small(self):
        t = np.linspace(0.0, 4.0, 200)
        st = updown_path((0.0, 0.3, 0.8), P, t)
        assert np.ptp(st.h_invariant) < 1e-8
        assert np.all(st.x == 0.0)
        assert np.allclose(st.z, st.xi * np.sqrt(1.0 + t * t), rtol=1e-12)
        assert st.z[0] == pytest.approx(0.8, rel=1e-12)
        assert st.y[0] == pytest.approx(0.3, rel=1e-12)

    def test_stays_inside_envelope(self):
        rng = np.random.default_rng(3)
        t = np.linspace(0.0, 6.0, 400)
        for _ in range(10):
            z0 = rng.uniform(0.2, 2.5)
            y0 = rng.normal(0.0, 0.5)
            env = envelope(y0, z0, P)
            st = updown_path((0.0, y0, z0), P, t)
            assert np.min(st.xi) >= env.xi_s * (1.0 - 1e-8) - 1e-12
            assert np.max(st.xi) <= env.xi_b * (1.0 + 1e-8)

    def test_sandwich_bounds(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            z0 = rng.uniform(0.1, min(3.5, P.detector_L - 0.1))
            y0 = rng.normal(0.0, 1.0 / math.sqrt(2.0 * P.omega))
            env = envelope(y0, z0, P)
            ev, diag = integrate_updown((0.0, y0, z0), P)
            assert ev.t >= env.t_s * (1.0 - 1e-9)
            assert ev.t <= env.tau_ceiling(P.omega) * (1.0 + 1e-9)
            assert ev.t <= env.t_b * (1.0 + 1e-9)
            assert diag.n_crossings >= 1

    def test_crossing_at_detector_plane(self):
        ev, _ = integrate_updown((0.0, 0.2, 0.6), P)
        s_root = math.asinh(ev.t)
        st = updown_path((0.0, 0.2, 0.6), P, [ev.t])
        assert st.z[0] == pytest.approx(P.detector_L, rel=1e-9)
        assert st.xi[0] * math.cosh(s_root) == pytest.approx(P.detector_L, rel=1e-10)

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            integrate_updown((0.0, 0.0, -0.5), P)
        with pytest.raises(DomainError):
            integrate_updown((0.0, 0.0, 7.0), P)


class TestQuadratureOracle:
    def test_xi_at_zero_and_extremum_sign_rule(self):
        for y0, z0 in [(0.4, 0.7), (-0.4, 0.7), (0.2, 1.5), (-0.2, 1.5)]:
            env = envelope(y0, z0, P)
            assert quadrature_xi(env, y0, z0, P, 0.0) == pytest.approx(z0, rel=1e-12)
            # first extremum attained: xi_b if y0 > 0, xi_s if y0 < 0
            phase = half_period_phase(y0, z0, P)
            s_grid = np.linspace(0.0, 2.0 * phase / math.sqrt(P.omega), 200)
            xs = [quadrature_xi(env, y0, z0, P, s) for s in s_grid]
            # grid max/min miss the turning point by O(ds^2)
            if y0 > 0:
                assert max(xs) == pytest.approx(env.xi_b, rel=1e-4)
                assert max(xs) <= env.xi_b * (1.0 + 1e-12)
            else:
                assert min(xs) == pytest.approx(env.xi_s, rel=1e-4)
                assert min(xs) >= env.xi_s * (1.0 - 1e-12)

    def test_fixed_point(self):
        tau = quadrature_arrival((0.0, 0.0, 1.0), P)
        assert tau == pytest.approx(math.sqrt(P.detector_L**2 - 1.0), rel=1e-12)

    def test_matches_ode_waveguide(self):
        p = ModelParams(omega=50.0, detector_L=50.0)
        r0 = (0.3, 0.1, 0.5)
        ev, _ = integrate_updown(r0, p)
        quad = quadrature_arrival(r0, p)
        assert quad == pytest.approx(ev.t, rel=1e-7)

    def test_xi_matches_ode_path(self):
        p = ModelParams(omega=50.0, detector_L=50.0)
        y0, z0 = 0.1, 0.5
        env = envelope(y0, z0, p)
        t_grid = np.linspace(0.1, 3.0, 20)
        st = updown_path((0.3, y0, z0), p, t_grid)
        s_grid = np.arcsinh(t_grid)
        xi_oracle = quadrature_xi(env, y0, z0, p, s_grid)
        assert np.max(np.abs(xi_oracle - st.xi)) < 1e-6

    def test_matches_ode_random(self):
        rng = np.random.default_rng(23)
        for _ in range(4):
            z0 = rng.uniform(0.3, 2.0)
            y0 = rng.normal(0.0, 0.5)
            ev, _ = integrate_updown((0.0, y0, z0), P)
            quad = quadrature_arrival((0.0, y0, z0), P)
            assert quad == pytest.approx(ev.t, rel=1e-7)


class TestSmallOmegaLimit:
    def test_path_converges_to_closed_form(self):
        p = ModelParams(omega=1e-6, detector_L=50.0)
        t = np.linspace(0.0, 3.0, 50)
        r0 = (0.1, 0.2, 0.7)
        st = updown_path(r0, p, t)
        limit = updown_smallomega_position(r0, t)
        assert np.max(np.abs(st.y - limit[:, 1])) < 1e-4
        assert np.max(np.abs(st.z - limit[:, 2])) < 1e-4

    def test_z0_unity_keeps_y_constant(self):
        pos = updown_smallomega_position((0.0, 0.3, 1.0), np.linspace(0, 5, 10))
        assert np.allclose(pos[:, 1], 0.3)

    def test_error_shrinks_with_omega(self):
        t = np.linspace(0.0, 3.0, 50)
        r0 = (0.0, 0.0, 0.5)
        errs = []
        for omega in [1e-2, 1e-4]:
            p = ModelParams(omega=omega, detector_L=50.0)
            st = updown_path(r0, p, t)
            limit = updown_smallomega_position(r0, t)
            errs.append(np.max(np.abs(st.z - limit[:, 2])))
        assert errs[1] < 0.02 * errs[0]


class TestIntegrationCap:
    def test_cap_exceeds_worst_case_bound(self):
        for omega, L in [(2.0, 5.0), (500.0, 50.0), (0.01, 10.0)]:
            p = ModelParams(omega=omega, detector_L=L)
            s_cap = default_s_cap(p)
            arg = 2.0 * math.pi / math.sqrt(omega) + math.asinh(math.sqrt(L * L - 1.0))
            assert s_cap > arg

    def test_no_crossing_raised_for_short_cap(self):
        with pytest.raises(NoCrossingError):
            integrate_updown((0.0, 0.0, 0.5), P, s_cap=1e-3)
