import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from hlpp.measure import TruncationError, hl_expectation, moment_observable
from hlpp.specfun.airy import airy_ai, airy_ai_prime, airy_kernel_matrix
from hlpp.specfun.contours import Contour, QuadratureRule
from hlpp.specfun.descent import descent_check, exact_derivative, phi
from hlpp.specfun.distributions import f_cdrp, f_gue, f_gue_result, gue_mean, gue_table
from hlpp.specfun.fredholm import (
    fredholm_det,
    fredholm_det_matrix,
    hadamard_tail,
    hadamard_term,
    series_terms,
)
from hlpp.specfun.kernels import (
    CDRPRescaledKernel,
    FiniteNKernel,
    GUERescaledKernel,
    airy_kernel_contour,
    finite_n_for_specialization,
)
from hlpp.specfun.moments import ContourHypothesisError, moment_contour
from hlpp.specfun.qseries import m_shift, q_pochhammer, s_ar, s_ar_derivative, s_ar_product, series_coefficient


class TestQSeries:
    def test_trivial_values(self):
        assert q_pochhammer(0.0, 0.5) == 1
        assert q_pochhammer(0.3, 0.0) == pytest.approx(0.7)

    def test_against_direct_product(self):
        direct = math.prod(1 - 0.5 * 0.5**k for k in range(200))
        assert abs(q_pochhammer(0.5, 0.5) - direct) < 1e-14

    @given(st.complex_numbers(max_magnitude=3.0), st.floats(0.05, 0.9))
    def test_matches_mpmath(self, a, t):
        assert abs(q_pochhammer(a, t) - complex(mpmath.qp(a, t))) < 1e-12 * max(1.0, abs(complex(mpmath.qp(a, t))))

    def test_s_at_zero(self):
        assert s_ar(0.0, 0.5, 0.9) == 0

    @given(st.floats(-0.5, 0.5), st.floats(-3.0, 3.0))
    def test_s_is_odd(self, x, y):
        z = complex(x, y)
        assert abs(s_ar(-z, 0.4, 0.8) + s_ar(z, 0.4, 0.8)) < 1e-12

    @given(st.floats(-0.4, 0.4), st.floats(-math.pi, math.pi))
    def test_exponential_matches_product(self, x, y):
        z = complex(x, y)
        a, r = 0.5, 0.9
        ez = cmath.exp(z)
        prod = 1.0 + 0j
        for j in range(400):
            prod *= (1 + a * r**j * ez) / (1 + a * r**j / ez)
        assert abs(cmath.exp(s_ar(z, a, r)) - prod) < 1e-12 * abs(prod)
        assert abs(s_ar_product(z, a, r) - cmath.exp(s_ar(z, a, r))) < 1e-12 * abs(prod)

    def test_odd_taylor_expansion(self):
        a, r = 0.5, 0.9
        c1, c3 = series_coefficient(0, a, r), series_coefficient(1, a, r)
        for z in (1e-3, 1e-3j, 7e-4 * cmath.exp(0.4j)):
            rest = s_ar(z, a, r) - (c1 * z + c3 * z**3)
            assert abs(rest) < 10 * abs(z) ** 5 / (1 - r)

    def test_first_coefficient_direct_sum(self):
        direct = 2 * math.fsum((-1) ** (k + 1) * 0.5**k / (1 - 0.5**k) for k in range(1, 200))
        assert series_coefficient(0, 0.5, 0.5) == pytest.approx(direct, rel=1e-14)
        assert m_shift(0.5, 0.5) == series_coefficient(0, 0.5, 0.5)

    def test_shift_vanishes_with_a(self):
        assert abs(m_shift(1e-12, 0.9)) < 1e-10

    def test_derivative(self):
        z, h = 0.1 + 0.5j, 1e-6
        fd = (s_ar(z + h, 0.3, 0.8) - s_ar(z - h, 0.3, 0.8)) / (2 * h)
        assert abs(s_ar_derivative(z, 0.3, 0.8) - fd) < 1e-7


class TestAiry:
    def test_value_at_zero(self):
        assert airy_ai(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-14)

    def test_maclaurin_series_at_one(self):
        # Ai(x) = c1 f(x) - c2 g(x), f = sum 3^k (1/3)_k x^{3k}/(3k)!, g = sum 3^k (2/3)_k x^{3k+1}/(3k+1)!
        c1 = 3 ** (-2 / 3) / math.gamma(2 / 3)
        c2 = 3 ** (-1 / 3) / math.gamma(1 / 3)
        f = g = 0.0
        p13 = p23 = 1.0
        for k in range(30):
            f += 3**k * p13 / math.factorial(3 * k)
            g += 3**k * p23 / math.factorial(3 * k + 1)
            p13 *= k + 1 / 3
            p23 *= k + 2 / 3
        assert airy_ai(1.0) == pytest.approx(c1 * f - c2 * g, abs=1e-12)

    def test_decay(self):
        xs = np.linspace(1, 20, 200)
        v = airy_ai(xs)
        assert np.all(np.diff(v) < 0) and np.all(v > 0)
        assert airy_ai_prime(2.0) == pytest.approx(float(mpmath.airyai(2.0, derivative=1)), rel=1e-12)

    def test_kernel_symmetric_and_matches_integral(self):
        pts = np.array([-2.0, -0.5, 0.0, 0.7, 1.9])
        k = airy_kernel_matrix(pts)
        assert np.allclose(k, k.T, atol=1e-15)
        for i, j in [(0, 1), (2, 2), (3, 4), (0, 0)]:
            ref, _ = integrate.quad(lambda s: airy_ai(pts[i] + s) * airy_ai(pts[j] + s), 0, 40, limit=400)
            assert abs(k[i, j] - ref) < 1e-10

    @pytest.mark.parametrize("eta, eta_prime", [(0.0, 0.5), (-1.0, 1.0), (1.2, 1.2)])
    def test_double_contour_form(self, eta, eta_prime):
        direct = airy_kernel_matrix(np.array([eta]), np.array([eta_prime]))[0, 0]
        assert airy_kernel_contour(eta, eta_prime) == pytest.approx(direct, abs=1e-9)


class TestQuadrature:
    def test_trapezoid_circle(self):
        z, dz = Contour.circle(2.0).discretize(QuadratureRule.trapezoid(32))
        meas = dz / (2j * math.pi)
        assert abs(np.sum(meas / z) - 1) < 1e-14
        assert abs(np.sum(meas * z**3)) < 1e-14

    def test_gauss_legendre_panels(self):
        x, w = QuadratureRule.gauss_legendre(8, 3).on_interval(-1.0, 2.0, (0.5,))
        assert np.sum(w * x**9) == pytest.approx((2.0**10 - 1) / 10, rel=1e-13)

    def test_half_line(self):
        x, dx = Contour.half_line(1.0).discretize(QuadratureRule.gauss_legendre(64))
        assert np.sum(np.exp(-x.real) * dx.real) == pytest.approx(math.exp(-1.0), rel=1e-10)

    def test_doubled(self):
        assert QuadratureRule.trapezoid(16).doubled().nodes == 32


class TestFredholm:
    def test_zero_kernel(self):
        res = fredholm_det_matrix(np.zeros((5, 5)), np.ones(5))
        assert res.value == 1 and res.series_value == 1

    def test_rank_one(self):
        x, w = QuadratureRule.gauss_legendre(20).on_interval(0.0, 1.0)
        f, g = np.exp(x), np.cos(x)
        res = fredholm_det_matrix(f[:, None] * g[None, :], w)
        assert res.value == pytest.approx(1 + np.sum(w * f * g), rel=1e-13)
        assert res.value == pytest.approx(1 + integrate.quad(lambda s: math.exp(s) * math.cos(s), 0, 1)[0], rel=1e-12)

    def test_newton_identities(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        e = series_terms(a, 6)
        # det(I + A) = 1 + e_1 + ... + e_6 exactly for a 6x6 matrix
        assert abs(1 + sum(e) - np.linalg.det(np.eye(6) + a)) < 1e-10 * abs(np.linalg.det(np.eye(6) + a))
        coeffs = np.poly(np.linalg.eigvals(a))  # x^6 - e1 x^5 + e2 x^4 ...
        assert np.allclose([(-1) ** n * c for n, c in enumerate(coeffs[1:], 1)], e, atol=1e-9)

    def test_hadamard_bound_and_series_agreement(self):
        spec = FiniteNKernel((0.3, 0.3), (0.3, 0.3), 0.5, -0.1)
        res = fredholm_det(spec, series_order=4)
        assert res.well_conditioned
        tail = res.series_remainder_bound()
        assert abs(res.series_value - res.value) <= tail + 1e-12
        assert abs(res.series_value - res.value) < 1e-6

    def test_hadamard_helpers(self):
        assert hadamard_term(0.0, 3) == 0.0
        assert hadamard_term(2.0, 2) == pytest.approx(2 * 4 / 2)
        assert hadamard_tail(0.1, 3) == pytest.approx(sum(hadamard_term(0.1, n) for n in range(4, 60)), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            fredholm_det_matrix(np.zeros((2, 3)), np.ones(2))
        with pytest.raises(ValueError):
            fredholm_det_matrix(np.zeros((2, 2)), np.ones(2), sign=2)


class TestFiniteKernel:
    def test_zero_u(self):
        spec = FiniteNKernel((0.3,), (0.3,), 0.5, 0.0)
        nodes, _ = spec.outer_contour().discretize(spec.default_rule())
        assert np.all(spec.matrix(nodes) == 0)
        assert fredholm_det(spec).value == 1

    def test_stable_under_doubling(self):
        base = FiniteNKernel((0.3,), (0.3,), 0.5, -0.2)
        fine = FiniteNKernel((0.3,), (0.3,), 0.5, -0.2, y_max=2 * base.truncation, outer_nodes=256)
        assert abs(fredholm_det(base).value - fredholm_det(fine).value) < 1e-8

    @pytest.mark.parametrize("u", [-0.5, 0.2 + 0.3j, -1.0 - 0.1j])
    def test_g_bounded_on_contours(self, u):
        spec = FiniteNKernel((0.3, 0.2), (0.25, 0.1), 0.5, u)
        w, _ = spec.outer_contour().discretize(QuadratureRule.trapezoid(64))
        s, _ = spec.line_rule()
        g = spec.g(w[:, None, None], w[None, :, None], s[None, None, :])
        assert np.max(np.abs(g)) <= spec.g_bound()

    def test_conjugate_symmetry(self):
        x = (0.3, 0.2)
        d1 = fredholm_det(FiniteNKernel(x, x, 0.5, 0.2 + 0.3j)).value
        d2 = fredholm_det(FiniteNKernel(x, x, 0.5, 0.2 - 0.3j)).value
        assert abs(d1 - d2.conjugate()) < 1e-13

    def test_truncation_guard(self):
        spec = FiniteNKernel((0.3,), (0.3,), 0.5, -0.2, y_max=2.0)
        with pytest.raises(TruncationError):
            fredholm_det(spec)

    @pytest.mark.parametrize("kw", [dict(u=0.5), dict(t=1.0), dict(x=(1.2,)), dict(y=(0.1, 0.2))])
    def test_validation(self, kw):
        base = dict(x=(0.3,), y=(0.3,), t=0.5, u=-0.1) | kw
        with pytest.raises(ValueError):
            FiniteNKernel(**base)

    @pytest.mark.parametrize("kernel", [GUERescaledKernel, CDRPRescaledKernel])
    def test_rescaled_kernels_match_finite_kernel(self, kernel):
        a, r, t, u = 0.5, 0.6, 0.5, -0.3
        finite = fredholm_det(finite_n_for_specialization(a, r, t, u)).value
        rescaled = fredholm_det(kernel(a, r, t, u * (1 / t - 1))).value
        assert abs(finite - rescaled) < 1e-10

    def test_wedge_check(self):
        with pytest.raises(ValueError):
            GUERescaledKernel(0.5, 0.6, 0.5, -0.3, A=1.0)


class TestDistributions:
    def test_tails(self):
        assert 1 - f_gue(8.0) < 1e-8
        assert f_gue(-8.0) < 1e-4

    def test_order_doubling(self):
        assert abs(f_gue_result(0.0, 64).value - f_gue_result(0.0, 128).value) < 1e-8

    def test_monotone(self):
        v = gue_table(np.arange(-6.0, 4.01, 0.25))
        assert np.all(np.diff(v) > 0)

    def test_known_values(self):
        # classical reference values of the GUE Tracy-Widom law
        assert f_gue(-2.0) == pytest.approx(0.41322414250512257, abs=1e-12)
        assert gue_mean() == pytest.approx(-1.7710868074, abs=1e-8)

    def test_cdrp_far_left_is_one(self):
        assert f_cdrp(-40.0, 5.0) == pytest.approx(1.0, abs=1e-10)

    def test_cdrp_decreasing(self):
        v = [f_cdrp(x, 5.0) for x in np.linspace(-4, 4, 9)]
        assert np.all(np.diff(v) < 0)

    def test_cdrp_large_time_approaches_gue(self):
        T = 64.0
        sigma = (2 / T) ** (1 / 3)
        for s in (-2.0, 1.0, 2.0):
            assert abs(f_cdrp(-s / sigma, T) - f_gue(s)) < 2e-2

    def test_cdrp_fermi_correction_is_second_order(self):
        # the Fermi factor smooths the indicator on scale sigma, which shifts the value by
        # (pi sigma)^2/6 F'' to leading order; the remainder must shrink like sigma^4
        h = 1e-2
        worst = {}
        for T in (64.0, 512.0):
            sigma = (2 / T) ** (1 / 3)
            raw = corrected = 0.0
            for s in np.linspace(-4, 2, 13):
                second = (f_gue(s + h) - 2 * f_gue(s) + f_gue(s - h)) / h**2
                d = f_cdrp(-s / sigma, T) - f_gue(s)
                raw = max(raw, abs(d))
                corrected = max(corrected, abs(d - (math.pi * sigma) ** 2 / 6 * second))
            worst[T] = (raw, corrected)
        assert worst[64.0][1] < 2e-2
        assert worst[512.0][0] < 1.5e-2 and worst[512.0][1] < 3e-3
        # sigma halves from T=64 to T=512: the raw gap falls ~4x, the corrected one ~16x
        assert worst[64.0][0] / worst[512.0][0] > 3
        assert worst[64.0][1] / worst[512.0][1] > 8

    def test_cdrp_rejects_bad_time(self):
        with pytest.raises(ValueError):
            f_cdrp(0.0, 0.0)


class TestMoments:
    def test_one_variable_closed_form(self):
        a, t = 0.1, 0.5
        expected = (1 + (1 - t) * a * a / (t * (1 - a * a))) / ((1 - t * a * a) / (1 - a * a))
        assert moment_contour(1, [a], [a], t) == pytest.approx(expected, abs=1e-8)

    def test_degenerate_measure(self):
        assert moment_contour(1, [1e-9], [1e-9], 0.5) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("method", ["nested", "collapsed"])
    def test_second_moment_two_variables(self, method):
        x, y, t = [0.3, 0.2], [0.2, 0.1], 0.5
        exact = hl_expectation(moment_observable(2, t), x, y, t).value.real
        assert abs(moment_contour(2, x, y, t, method) - exact) < 1e-6

    def test_hypothesis_enforced(self):
        with pytest.raises(ContourHypothesisError):
            moment_contour(2, [0.3], [0.3], 0.5)

    def test_wider_geometric_regime(self):
        x, y, t = [0.3, 0.2], [0.4, 0.2], 0.5
        exact = hl_expectation(moment_observable(2, t), x, y, t).value.real
        assert abs(moment_contour(2, x, y, t, check_hypothesis=False) - exact) < 1e-6

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            moment_contour(1, [0.1], [0.1], 0.5, method="residues")


class TestDescent:
    def test_example(self):
        assert descent_check(0.5, 0.9, 0.05).ok

    @pytest.mark.parametrize("A", [0.05, -0.05])
    def test_origin_is_stationary(self, A):
        assert abs(exact_derivative(0.0, 0.5, 0.9, A)) < 1e-10

    def test_mirrored_sign(self):
        ys = np.linspace(0.1, math.pi, 25)
        plus = np.array([exact_derivative(y, 0.5, 0.9, 0.05) for y in ys])
        minus = np.array([exact_derivative(y, 0.5, 0.9, -0.05) for y in ys])
        assert np.all(plus <= 0) and np.all(minus >= 0)

    def test_exact_derivative_matches_finite_difference(self):
        y, h = 1.3, 1e-6
        fd = (phi(y + h, 0.3, 0.99, 0.05) - phi(y - h, 0.3, 0.99, 0.05)) / (2 * h)
        assert exact_derivative(y, 0.3, 0.99, 0.05) == pytest.approx(float(fd), rel=1e-5)

    @given(st.floats(0.1, 0.9), st.floats(0.8, 0.99), st.floats(0.005, 0.05), st.sampled_from([1, -1]))
    def test_no_violations_for_shallow_contours(self, a, r, A, sign):
        assume(a * math.exp(A * math.pi) < 1)  # contour inside the analyticity strip of S
        assert descent_check(a, r, sign * A, grid=100).ok

    @pytest.mark.parametrize("kw", [dict(A=0.0), dict(epsilon=0)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            descent_check(**(dict(a=0.5, r=0.9, A=0.05) | kw))
