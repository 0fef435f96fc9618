import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hlpp.analysis import (
    ScalingFrame,
    a_of_r,
    cdrp_kappa,
    cdrp_t,
    coefficient_ladder,
    expected_slice_length,
    ks_distance,
    li3,
    limit_shape,
    quantile_residuals,
    rescale_cdrp,
    rescale_gue,
    volume_expectation,
    volume_law,
    xi_hat,
    zeta3,
)
from hlpp.measure import partition_function

ZETA3 = 1.2020569031595942853997


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class TestScalingFrame:
    def test_chi_at_zero(self):
        frame = ScalingFrame(0.9, 0.3, 0.0)
        assert frame.chi == pytest.approx(4 ** (1 / 3), rel=1e-15)
        assert frame.extrapolated

    @given(st.floats(-6, 6))
    def test_chi_equals_alpha(self, tau):
        frame = ScalingFrame(0.95, 0.3, tau)
        assert frame.chi == pytest.approx(frame.alpha, rel=1e-13)

    def test_diagonal_and_a(self):
        frame = ScalingFrame(0.98, 0.0, 1.0)
        assert frame.N == pytest.approx(50) and frame.diagonal == 50
        assert frame.a_r == pytest.approx(0.98**25.5)
        assert a_of_r(-1.0, 0.98) == pytest.approx(0.98 ** ((1 + 50) / 2))

    def test_derivatives_of_profile(self):
        frame = ScalingFrame(0.9, 0.2, 1.3)
        h = 1e-5
        fd1 = (limit_shape(1.3 + h) - limit_shape(1.3 - h)) / (2 * h)
        fd2 = (limit_shape(1.3 + h) - 2 * limit_shape(1.3) + limit_shape(1.3 - h)) / h**2
        assert frame.f_prime == pytest.approx(fd1, rel=1e-8)
        assert frame.f_second == pytest.approx(fd2, rel=1e-4)

    @pytest.mark.parametrize("kw", [dict(r=1.0), dict(r=0.0), dict(t=1.0), dict(t=-0.1)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            ScalingFrame(**(dict(r=0.9, t=0.3, tau=1.0) | kw))

    def test_centering_within_constant_of_leading_order(self):
        frame = ScalingFrame(0.99, 0.5, 1.0)
        gap = frame.M - 2 * frame.N * math.log1p(math.exp(-0.5))
        assert abs(gap) < 2
        finer = ScalingFrame(0.999, 0.5, 1.0)
        assert abs(finer.M - 2 * finer.N * math.log1p(math.exp(-0.5))) < 2


class TestLimitShape:
    def test_values(self):
        assert limit_shape(0.0) == pytest.approx(2 * math.log(2))
        assert limit_shape(60.0) < 1e-12

    @given(st.floats(0, 20), st.floats(0.001, 5))
    def test_even_positive_decreasing(self, tau, d):
        assert limit_shape(-tau) == limit_shape(tau)
        assert limit_shape(tau) > 0
        assert limit_shape(tau + d) < limit_shape(tau)


class TestRescaling:
    frame = ScalingFrame(0.99, 0.5, 1.0)

    def test_centering_maps_to_zero(self):
        assert rescale_gue(self.frame.M, self.frame) == pytest.approx(0.0, abs=1e-12)

    def test_gue_slope(self):
        slope = self.frame.alpha * self.frame.N ** (-1 / 3)
        grid = np.arange(40, 120)
        xi = rescale_gue(grid, self.frame)
        assert np.allclose(np.diff(xi), slope, rtol=1e-12)

    def test_cdrp_plug_in(self):
        T = 3.0
        kappa = cdrp_kappa(self.frame, T)
        n13 = self.frame.N ** (1 / 3)
        assert rescale_cdrp(self.frame.M, self.frame, T) == pytest.approx(math.log(n13 / kappa))
        grid = np.arange(40, 120)
        xi = rescale_cdrp(grid, self.frame, T)
        assert np.allclose(np.diff(xi), kappa / n13, rtol=1e-12)

    def test_cdrp_statistic_tracks_xi_hat(self):
        # at t on the crossover scale the two statistics differ by log((1-t)/(-log t)) -> 0
        T = 2.0
        for r in (0.99, 0.9999, 0.999999):
            t = cdrp_t(r, 1.0, T)
            frame = ScalingFrame(r, t, 1.0)
            gap = rescale_cdrp(frame.M + 3.0, frame, T) - xi_hat(frame.M + 3.0, frame)
            assert gap == pytest.approx(math.log((1 - t) / -math.log(t)), abs=1e-9)
        assert abs(gap) < 1e-2

    def test_bridging_identity(self):
        for t in (0.9, 0.99, 0.999999):
            assert (1 - t) / -math.log(t) == pytest.approx(1.0, abs=1 - t)

    def test_xi_hat_needs_positive_t(self):
        with pytest.raises(ValueError):
            xi_hat(10, ScalingFrame(0.9, 0.0, 1.0))

    def test_kappa_needs_positive_time(self):
        with pytest.raises(ValueError):
            cdrp_kappa(self.frame, 0.0)

    def test_expected_slice_length_shift(self):
        frame = ScalingFrame(0.98, 0.0, 2.0)
        assert expected_slice_length(frame, 0.0) == pytest.approx(frame.M)
        shifted = expected_slice_length(frame, -1.7710868074)
        assert frame.M - shifted == pytest.approx(1.7710868074 * frame.N ** (1 / 3) / frame.alpha)


class TestCoefficientLadder:
    @pytest.mark.parametrize("a", [0.2, 0.5, 0.9])
    def test_monotone_decay(self, a):
        rungs = coefficient_ladder(a)
        for prev, nxt in zip(rungs, rungs[1:]):
            assert nxt.c1_residual < prev.c1_residual
            assert nxt.c3_residual < prev.c3_residual
        assert rungs[-1].c1_scaled == pytest.approx(2 * math.log1p(a), abs=1e-3)
        assert rungs[-1].c3_scaled == pytest.approx(a / (3 * (1 + a) ** 2), abs=1e-3)


class TestVolumeLaw:
    def test_zeta3(self):
        assert zeta3() == pytest.approx(ZETA3, rel=1e-15)

    def test_endpoints(self):
        assert volume_law(0.0) == pytest.approx(2 * ZETA3, rel=1e-15)
        assert volume_law(1.0) == pytest.approx(0.0, abs=1e-15)
        assert volume_law(0.999999) < 1e-4

    def test_half_against_long_series(self):
        k = np.arange(1, 10**6 + 1, dtype=float)
        li = math.fsum(0.5**k[:1100] / k[:1100] ** 3)
        zeta = math.fsum(1 / k**3) + 1 / (2 * 1e6**2)  # tail of sum k^-3 beyond 10^6
        assert volume_law(0.5) == pytest.approx(2 * zeta - 2 * li, abs=1e-12)

    @given(st.floats(0.0, 0.999))
    def test_li3_against_direct_series(self, t):
        n = 1 + int(math.log(1e-18) / math.log(max(t, 1e-3)))
        k = np.arange(1, max(n, 2) + 1, dtype=float)
        direct = math.fsum(t**k / k**3) if t > 0 else 0.0
        assert li3(t) == pytest.approx(direct, abs=1e-12)

    def test_li3_domain(self):
        with pytest.raises(ValueError):
            li3(1.5)

    @given(st.floats(0.0, 0.99), st.floats(0.001, 0.5))
    def test_strictly_decreasing(self, t, d):
        assert volume_law(min(t + d, 1.0)) < volume_law(t)

    def test_finite_r_mean_from_partition_function(self):
        # E|pi| = r d/dr log Z, by a central difference of the closed product
        r, t, h = 0.7, 0.3, 1e-5
        dlog = (math.log(partition_function(r + h, t)) - math.log(partition_function(r - h, t))) / (2 * h)
        assert volume_expectation(r, t).mean == pytest.approx((1 - r) ** 3 * r * dlog, rel=1e-8)

    def test_finite_r_approaches_limit_monotonically(self):
        means = []
        for r in (0.9, 0.95, 0.99):
            fv = volume_expectation(r, 0.0)
            assert fv.truncation_error < 1e-12
            means.append(fv.mean)
        gaps = [2 * ZETA3 - m for m in means]
        assert all(g > 0 for g in gaps) and gaps[0] > gaps[1] > gaps[2]

    def test_finite_r_validation(self):
        with pytest.raises(ValueError):
            volume_expectation(1.0, 0.3)


class TestKolmogorovSmirnov:
    def test_single_sample_at_median(self):
        assert ks_distance([0.0], _logistic) == pytest.approx(0.5)

    @pytest.mark.parametrize("c", [-1.0, 0.0, 2.0])
    def test_constant_samples(self, c):
        f = _logistic(c)
        assert ks_distance([c] * 7, _logistic) == pytest.approx(max(f, 1 - f))

    def test_inverse_transform_samples(self):
        u = np.random.default_rng(4).random(10**4)
        xs = np.log(u / (1 - u))  # logistic quantile function
        assert ks_distance(xs, _logistic) < 0.02

    def test_empty(self):
        with pytest.raises(ValueError):
            ks_distance([], _logistic)
        with pytest.raises(ValueError):
            quantile_residuals([], _logistic)

    def test_quantile_residuals(self):
        u = np.random.default_rng(5).random(10**4)
        xs = np.log(u / (1 - u))
        rows = quantile_residuals(xs, _logistic)
        assert [lv for lv, _, _ in rows] == [0.1, 0.25, 0.5, 0.75, 0.9]
        assert all(abs(res) < 0.02 for _, _, res in rows)
