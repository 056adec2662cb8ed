from __future__ import annotations

import json
import math
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from frachum.errors import ConvergenceError, DomainError
from frachum.mlf import (
    FracOrder,
    kernel_multiplier,
    kernel_primitives,
    kernel_values,
    mittag_leffler,
    mittag_leffler_array,
    wright_density,
)

TABLE = json.loads((Path(__file__).parent / "oracles" / "mlf_table.json").read_text())


def wright_tail(alpha: float) -> float:
    """Point beyond which the density is below 1e-40 (asymptotic exponent 100)."""
    return (100.0 / (1.0 - alpha)) ** (1.0 - alpha) / alpha**alpha


@lru_cache(maxsize=None)
def wright_rule(alpha: float, n: int = 64):
    """Gauss-Legendre nodes, weights and density values on (0, tail)."""
    x, w = np.polynomial.legendre.leggauss(n)
    top = wright_tail(alpha)
    th, wt = 0.5 * top * (x + 1.0), 0.5 * top * w
    return th, wt, np.array([wright_density(alpha, t) for t in th])


def wright_oracle(alpha: float, lam: float, t: float) -> float:
    th, wt, f = wright_rule(alpha, 128)
    return alpha * float(np.sum(wt * th * f * np.exp(lam * t**alpha * th))) * t ** (alpha - 1.0)


class TestFracOrder:
    @pytest.mark.parametrize("a", [0.0, -0.1, 1.0000001, 2.0, math.nan, math.inf])
    def test_rejects(self, a):
        with pytest.raises(DomainError):
            FracOrder(a)

    def test_classical_sentinel(self):
        assert FracOrder(1.0).is_classical
        assert not FracOrder(0.5).is_classical
        assert FracOrder(0.5).gamma_alpha == pytest.approx(math.sqrt(math.pi))


class TestMittagLeffler:
    def test_exponential(self):
        assert mittag_leffler(1.0, 1.0, 1.0) == pytest.approx(math.e, rel=1e-15)

    def test_zero_argument(self):
        assert mittag_leffler(0.5, 0.5, 0.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-15)

    def test_series_oracle_200_terms(self):
        with mpmath.workdps(50):
            ref = mpmath.fsum(mpmath.mpf(-1) ** k * mpmath.rgamma(mpmath.mpf(0.5) * k + mpmath.mpf(0.5)) for k in range(200))
        assert mittag_leffler(0.5, 0.5, -1.0) == pytest.approx(float(ref), rel=1e-12)

    def test_frozen_table(self):
        worst = 0.0
        for row in TABLE:
            ref = float(row["value"])
            got = mittag_leffler(row["alpha"], row["beta"], row["z"])
            worst = max(worst, abs(got - ref) / abs(ref))
        assert worst <= 1e-12

    def test_erfc_closed_form(self):
        z = np.linspace(-100.0, 5.0, 211)
        ref = special.erfcx(-z)  # E_{1/2}(z) = exp(z^2) erfc(-z)
        got = mittag_leffler_array(0.5, 1.0, z)
        assert np.max(np.abs(got - ref) / ref) <= 1e-12

    @pytest.mark.parametrize("beta", [2.0, 3.0])
    def test_classical_closed_forms(self, beta):
        z = np.array([-30.0, -1.0, -1e-9, 0.0, 1e-9, 2.0])
        with mpmath.workdps(40):
            ref = [float(mpmath.nsum(lambda k: mpmath.mpf(x) ** k * mpmath.rgamma(k + beta), [0, mpmath.inf])) for x in z]
        assert np.allclose(mittag_leffler_array(1.0, beta, z), ref, rtol=1e-12, atol=0)

    def test_alpha_above_one(self):
        # E_{2,1}(-x^2) = cos(x)
        assert mittag_leffler(1.999999, 1.0, -4.0) == pytest.approx(math.cos(2.0), rel=1e-5)
        assert mittag_leffler(1.5, 1.0, -1.0) > 0

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0.0), (2.0, 1.0, 0.0), (0.5, 0.0, 0.0), (0.5, 1.0, math.inf)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            mittag_leffler(*args)

    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from([0.3, 0.5, 0.7, 0.9]), st.floats(0.2, 2.0), st.floats(-100.0, 0.0))
    def test_positive_on_negative_axis(self, a, b, z):
        # completely monotone for 0 < alpha <= 1, beta >= alpha
        if b >= a:
            assert mittag_leffler(a, b, z) > 0

    def test_recurrence(self):
        # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
        for a in (0.3, 0.6, 0.9):
            for z in (-40.0, -3.0, 0.7, 4.0):
                lhs = mittag_leffler(a, 1.0, z)
                rhs = 1.0 + z * mittag_leffler(a, a + 1.0, z)
                assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-13)


class TestWrightDensity:
    def test_unit_mass_adaptive(self):
        val, _ = integrate.quad(lambda t: wright_density(0.5, t), 0.0, wright_tail(0.5), limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_half_is_gaussian(self):
        # M_{1/2}(x) = exp(-x^2/4)/sqrt(pi)
        for x in (0.1, 1.0, 3.0, 7.0):
            assert wright_density(0.5, x) == pytest.approx(math.exp(-x * x / 4) / math.sqrt(math.pi), rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
    def test_moments(self, alpha):
        th, wt, f = wright_rule(alpha)
        for v in (0, 1, 2):
            ref = math.gamma(1 + v) / math.gamma(1 + alpha * v)
            assert float(np.sum(wt * th**v * f)) == pytest.approx(ref, abs=1e-6)

    def test_first_moment_half(self):
        th, wt, f = wright_rule(0.5)
        assert float(np.sum(wt * th * f)) == pytest.approx(1.1283791670955126, abs=1e-6)

    def test_nonnegative_and_tail(self):
        assert wright_density(0.6, 1e-8) == pytest.approx(1.0 / math.gamma(0.4), rel=1e-6)
        assert wright_density(0.6, 1e3) == 0.0
        assert all(wright_density(0.7, t) >= 0 for t in np.linspace(0.01, 8.0, 40))

    @pytest.mark.parametrize("theta", [0.0, -1.0, math.nan])
    def test_domain(self, theta):
        with pytest.raises(DomainError):
            wright_density(0.5, theta)

    def test_point_mass_at_one(self):
        with pytest.raises(DomainError):
            wright_density(1.0, 1.0)

    def test_convergence_error_is_defined(self):
        assert issubclass(ConvergenceError, ArithmeticError)


class TestKernel:
    def test_classical(self):
        for lam, t in [(-1.0, 0.3), (-50.0, 0.9), (0.0, 2.0)]:
            assert kernel_multiplier(1.0, lam, t) == pytest.approx(math.exp(lam * t), rel=1e-15)

    def test_zero_eigenvalue(self):
        assert kernel_multiplier(0.5, 0.0, 1.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)

    def test_wright_integral_single(self):
        assert kernel_multiplier(0.6, -math.pi**2, 0.5) == pytest.approx(wright_oracle(0.6, -math.pi**2, 0.5), abs=1e-6)

    def test_wright_integral_grid(self):
        worst = 0.0
        for a in (0.3, 0.4, 0.5, 0.6, 0.7):
            for lam in (0.0, -1.0, -math.pi**2, -20.0, -4 * math.pi**2):
                for t in (0.05, 0.2, 0.5, 0.8, 1.0):
                    worst = max(worst, abs(kernel_multiplier(a, lam, t) - wright_oracle(a, lam, t)))
        assert worst <= 1e-6

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([0.3, 0.6, 0.9, 1.0]), st.floats(0.01, 2.0),
           st.floats(0.0, 200.0), st.floats(0.0, 200.0))
    def test_monotone_in_eigenvalue(self, a, t, l1, l2):
        lo, hi = sorted((l1, l2))
        assert kernel_multiplier(a, -hi, t) <= kernel_multiplier(a, -lo, t) * (1 + 1e-13)
        assert kernel_multiplier(a, -hi, t) > 0

    def test_domain(self):
        with pytest.raises(DomainError):
            kernel_multiplier(0.5, -1.0, 0.0)
        with pytest.raises(DomainError):
            kernel_multiplier(0.5, 1.0, 1.0)
        with pytest.raises(DomainError):
            kernel_values(0.5, -1.0, np.array([0.0, 1.0]))

    def test_primitives(self):
        a, lam = 0.6, -7.0
        tau = np.array([0.0, 0.3, 1.0])
        k1, k2 = kernel_primitives(a, lam, tau)
        assert k1[0] == k2[0] == 0.0
        for i in (1, 2):
            q1, _ = integrate.quad(lambda s: kernel_values(a, lam, np.array([s]))[0], 0, tau[i], limit=200)
            assert k1[i] == pytest.approx(q1, rel=1e-9)
            q2, _ = integrate.quad(lambda s: kernel_primitives(a, lam, np.array([s]))[0][0], 0, tau[i])
            assert k2[i] == pytest.approx(q2, rel=1e-9)
