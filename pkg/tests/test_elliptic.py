import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from k3e.elliptic import (
    CurveCoefficients,
    DegenerateCubicError,
    PeriodLattice,
    agm,
    eisenstein_g2,
    eisenstein_g3,
    eisenstein_series,
    is_pole,
    j_invariant,
    period_lattice,
    reduce_basis,
    wp,
    wp_pair,
    wp_prime,
    wp_second,
)

mpmath = pytest.importorskip("mpmath")

# lemniscate constant: real period of y^2 = 4x^3 - 4x
LEMNISCATE = 2.6220575542921198104648395899


def random_curve(rng):
    while True:
        g2 = complex(rng.normal(), rng.normal()) * 2
        g3 = complex(rng.normal(), rng.normal()) * 2
        c = CurveCoefficients(g2, g3)
        if abs(c.disc) / max(1, abs(g2) ** 3) > 1e-3:
            return c


def wp_theta(z, om1, tau):
    """Weierstrass p for the lattice om1 (Z + tau Z) from Jacobi theta functions."""
    with mpmath.workdps(30):
        q = mpmath.exp(1j * mpmath.pi * tau)
        nu = mpmath.pi * z / om1
        t2, t3 = mpmath.jtheta(2, 0, q), mpmath.jtheta(3, 0, q)
        ratio = t2 * t3 * mpmath.jtheta(4, nu, q) / mpmath.jtheta(1, nu, q)
        val = (mpmath.pi / om1) ** 2 * (ratio ** 2 - (t2 ** 4 + t3 ** 4) / 3)
        return complex(val)


class TestAgm:
    def test_fixed_point(self):
        assert agm(1, 1) == 1

    def test_symmetric(self):
        assert agm(1, 0.5) == pytest.approx(agm(0.5, 1), rel=1e-15)
        assert agm(2 + 1j, 0.3 - 0.5j) == pytest.approx(agm(0.3 - 0.5j, 2 + 1j), rel=1e-14)

    def test_complete_elliptic_integral(self):
        # K(k) = pi / (2 agm(1, k')) with k' = 1/2
        k2 = 0.75
        oracle, _ = integrate.quad(lambda th: 1 / math.sqrt(1 - k2 * math.sin(th) ** 2), 0, math.pi / 2,
                                   epsabs=1e-13, epsrel=1e-13)
        assert math.pi / (2 * agm(1, 0.5).real) == pytest.approx(oracle, rel=1e-13)
        assert oracle == pytest.approx(2.1565156474996432, rel=1e-14)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            agm(0, 1)


class TestReduceBasis:
    def test_fundamental_domain(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            w1 = complex(*rng.normal(size=2))
            w2 = w1 * complex(rng.normal() * 3, abs(rng.normal()) + 0.01)
            a, b = reduce_basis(w1, w2)
            tau = b / a
            assert tau.imag > 0
            assert -0.5 - 1e-12 <= tau.real < 0.5 + 1e-12
            assert abs(tau) >= 1 - 1e-12
            # same lattice: unimodular change of basis
            m = np.linalg.solve([[w1.real, w2.real], [w1.imag, w2.imag]], [[a.real, b.real], [a.imag, b.imag]])
            assert_allclose(np.round(m), m, atol=1e-6)
            assert abs(round(np.linalg.det(np.round(m)))) == 1

    def test_hexagonal_tie(self):
        a, b = reduce_basis(1, cmath.exp(1j * math.pi / 3))
        assert b / a == pytest.approx(cmath.exp(2j * math.pi / 3), abs=1e-12)


class TestPeriodLattice:
    def test_lemniscatic(self):
        lat = period_lattice(CurveCoefficients(4, 0))
        assert lat.tau == pytest.approx(1j, abs=1e-14)
        # independent oracle: real half period from quadrature
        # x = 1 + u^2 removes the endpoint singularity
        half, _ = integrate.quad(lambda u: 2 / math.sqrt(4 * (1 + u * u) * (2 + u * u)), 0, np.inf,
                                 epsabs=1e-13, epsrel=1e-13)
        assert abs(lat.omega1) == pytest.approx(2 * half, rel=1e-10)
        assert abs(lat.omega1) == pytest.approx(LEMNISCATE, rel=1e-14)

    def test_equianharmonic(self):
        lat = period_lattice(CurveCoefficients(0, 1))
        assert lat.tau == pytest.approx(cmath.exp(2j * math.pi / 3), abs=1e-12)

    def test_singular_rejected(self):
        with pytest.raises(DegenerateCubicError):
            period_lattice(CurveCoefficients(3, 1))

    def test_tau_upper_half_plane(self):
        with pytest.raises(ValueError):
            PeriodLattice(1, 1)

    def test_round_trip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            c = random_curve(rng)
            lat = period_lattice(c)
            g2 = eisenstein_g2(lat).value
            g3 = eisenstein_g3(lat).value
            s = max(abs(c.g2), abs(c.g3))
            assert abs(g2 - c.g2) <= 1e-9 * s
            assert abs(g3 - c.g3) <= 1e-9 * s

    def test_homogeneity(self):
        # lattice scaled by 1/lam belongs to (lam^4 g2, lam^6 g3)
        c = CurveCoefficients(1.3 - 0.2j, 0.4 + 0.9j)
        lam = 1.7 + 0.6j
        a = period_lattice(c)
        b = period_lattice(CurveCoefficients(lam ** 4 * c.g2, lam ** 6 * c.g3))
        assert b.covolume == pytest.approx(a.covolume / abs(lam) ** 2, rel=1e-12)


class TestEisenstein:
    @pytest.mark.parametrize("tau", [1j, 0.3 + 1.1j, -0.5 + 0.9j, 0.1 + 2.5j])
    def test_q_series(self, tau):
        lat = PeriodLattice.from_basis(1, tau)
        with mpmath.workdps(30):
            q = mpmath.exp(2j * mpmath.pi * tau)
            e4 = 1 + 240 * sum(_sigma(n, 3) * q ** n for n in range(1, 80))
            e6 = 1 - 504 * sum(_sigma(n, 5) * q ** n for n in range(1, 80))
            g4 = complex(mpmath.pi ** 4 / 45 * e4)
            g6 = complex(2 * mpmath.pi ** 6 / 945 * e6)
        assert eisenstein_series(lat, 4).value == pytest.approx(g4, rel=1e-10, abs=1e-12)
        assert eisenstein_series(lat, 6).value == pytest.approx(g6, rel=1e-10, abs=1e-12)

    def test_symmetric_lattices(self):
        assert abs(eisenstein_g3(PeriodLattice.from_basis(1, 1j)).value) <= 1e-10
        assert abs(eisenstein_g2(PeriodLattice.from_basis(1, cmath.exp(2j * math.pi / 3))).value) <= 1e-10

    def test_error_estimate_is_reported(self):
        v = eisenstein_g2(PeriodLattice.from_basis(1, 0.2 + 1.3j))
        assert 0 <= v.error < 1e-8 * max(1, abs(v.value))

    def test_odd_weight_rejected(self):
        with pytest.raises(ValueError):
            eisenstein_series(PeriodLattice.from_basis(1, 1j), 2)


def _sigma(n, k):
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


class TestWp:
    def test_theta_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            c = random_curve(rng)
            lat = period_lattice(c)
            for z in (0.13 + 0.07j, 0.31 * lat.omega1 + 0.22 * lat.omega2):
                assert wp(z, lat) == pytest.approx(wp_theta(z, lat.omega1, lat.tau), rel=1e-9)

    def test_laurent_expansion(self):
        c = CurveCoefficients(2.0 + 0.5j, -1.0 + 0.3j)
        lat = period_lattice(c)
        z = 0.01 + 0.005j
        series = 1 / z ** 2 + c.g2 * z ** 2 / 20 + c.g3 * z ** 4 / 28
        assert wp(z, lat) == pytest.approx(series, rel=1e-12)

    def test_poles(self):
        lat = period_lattice(CurveCoefficients(4, 0))
        for m, n in [(0, 0), (1, 0), (-2, 1)]:
            w = lat.point(m, n)
            assert is_pole(w, lat)
            assert math.isinf(abs(wp(w, lat)))
            assert math.isinf(abs(wp_prime(w, lat)))

    def test_even_and_odd(self):
        lat = period_lattice(CurveCoefficients(1 + 1j, 0.5))
        z = 0.21 - 0.4j
        p, dp = wp_pair(z, lat)
        pm, dpm = wp_pair(-z, lat)
        assert pm == pytest.approx(p, rel=1e-13)
        assert dpm == pytest.approx(-dp, rel=1e-13)

    def test_second_derivative(self):
        c = CurveCoefficients(3 - 1j, 0.2 + 0.7j)
        lat = period_lattice(c)
        z, h = 0.37 + 0.11j, 1e-5
        fd = (wp_prime(z + h, lat) - wp_prime(z - h, lat)) / (2 * h)
        assert wp_second(z, lat) == pytest.approx(fd, rel=1e-7)

    def test_vectorized(self):
        lat = period_lattice(CurveCoefficients(4, 0))
        zs = np.array([0.3, 0.4 + 0.1j, 0.0])
        vals = wp(zs, lat)
        assert vals.shape == (3,)
        assert vals[0] == pytest.approx(wp(0.3, lat))
        assert math.isinf(abs(vals[2]))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 20), x=st.floats(-3, 3), y=st.floats(-3, 3))
    def test_ode(self, seed, x, y):
        c = random_curve(np.random.default_rng(seed))
        lat = period_lattice(c)
        z = complex(x, y)
        if is_pole(z, lat):
            return
        p, dp = wp_pair(z, lat)
        assert abs(dp ** 2 - (4 * p ** 3 - c.g2 * p - c.g3)) <= 1e-8 * (1 + abs(p) ** 3)


class TestJ:
    def test_special_values(self):
        assert j_invariant(CurveCoefficients(4, 0)) == pytest.approx(1728)
        assert j_invariant(CurveCoefficients(0, 1)) == 0

    def test_scaling_invariance(self):
        c = CurveCoefficients(1.2 + 0.3j, -0.4j)
        lam = 0.8 - 1.1j
        assert j_invariant(CurveCoefficients(lam ** 4 * c.g2, lam ** 6 * c.g3)) == pytest.approx(j_invariant(c), rel=1e-12)
