import math

import numpy as np
import pytest
from scipy.linalg import toeplitz

from nifbm.asymptotics import (
    empirical_estimator_cov,
    gamma_square_series,
    jacobian_one,
    jacobian_one_det,
    sigma0_one,
    sigma_tilde_one,
)
from nifbm.covariance import (
    MixedParams,
    NifbmParams,
    autocov_sequence,
    gamma,
)
from nifbm.errors import HTooLargeError
from nifbm.estimation import forward_moment_map_one


class TestGammaSquareSeries:
    def test_brownian_exact(self):
        # only lags -2..2 contribute: (2/3)^2 + 2*(1/6)^2 = 1/2
        assert gamma_square_series(0.5, (0, 0)) == pytest.approx(0.5, abs=1e-14)

    def test_brownian_shifted(self):
        # sum of gamma(i)*gamma(i+1) = 2 * (2/3)*(1/6) = 2/9
        assert gamma_square_series(0.5, (0, 1)) == pytest.approx(2.0 / 9.0, abs=1e-14)
        assert gamma_square_series(0.5, (0, 2)) == pytest.approx(1.0 / 36.0, abs=1e-14)

    def test_shift_symmetry(self):
        for H in (0.2, 0.6, 0.7):
            a = gamma_square_series(H, (0, 3), n_terms=20000)
            b = gamma_square_series(H, (3, 0), n_terms=20000)
            c = gamma_square_series(H, (5, 8), n_terms=20000)
            assert a == pytest.approx(b, rel=1e-12)
            assert a == pytest.approx(c, rel=1e-9)

    def test_cauchy_schwarz(self):
        for H in (0.15, 0.45, 0.7):
            s00 = gamma_square_series(H, (0, 0), n_terms=20000)
            for k in (1, 2, 5):
                assert abs(gamma_square_series(H, (0, k), n_terms=20000)) <= s00

    def test_h_too_large(self):
        with pytest.raises(HTooLargeError):
            gamma_square_series(0.75, (0, 0))
        with pytest.raises(HTooLargeError):
            gamma_square_series(0.9, (0, 0))

    def test_truncation_certified(self):
        # ten times more exact terms must not move the value
        for H in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7):
            for shifts in ((0, 0), (0, 1), (0, 2)):
                small = gamma_square_series(H, shifts, n_terms=10**4)
                large = gamma_square_series(H, shifts, n_terms=10**5)
                assert small == pytest.approx(large, rel=1e-9)


class TestSigmaTilde:
    def test_ratio_exact(self):
        for H in (0.1, 0.4, 0.7):
            sig = sigma_tilde_one(H, 2.0, n_terms=20000)
            assert sig.s22 == 2.0 ** (4 * H + 1) * sig.s11

    def test_brownian_values(self):
        sig = sigma_tilde_one(0.5, 1.0)
        assert sig.s11 == pytest.approx(0.5, abs=1e-13)
        assert sig.s22 == pytest.approx(4.0, abs=1e-12)
        # 0.5 * (3*S0 + 4*S1 + S2) with S0=1/2, S1=2/9, S2=1/36
        assert sig.s12 == pytest.approx(0.5 * (1.5 + 8.0 / 9.0 + 1.0 / 36.0), abs=1e-13)

    def test_positive_semidefinite(self):
        for H in (0.1, 0.3, 0.5, 0.7):
            for h in (0.5, 2.0):
                sig = sigma_tilde_one(H, h, n_terms=20000)
                assert sig.s11 * sig.s22 - sig.s12**2 >= 0.0

    def test_h_scaling(self):
        a = sigma_tilde_one(0.3, 1.0, n_terms=20000)
        b = sigma_tilde_one(0.3, 3.0, n_terms=20000)
        assert b.s11 / a.s11 == pytest.approx(3.0**1.2, rel=1e-12)

    def test_isserlis_finite_n_exact(self):
        # exact finite-N covariance of the xi pair through the trace
        # identity cov(z'Az, z'Bz) = 2 tr(A S B S); the series entries
        # must be its large-N limits
        H, h, n = 0.4, 1.5, 400
        base_n = 2 * n + 1
        row = autocov_sequence(NifbmParams(H, h), h, 1, base_n).values
        cov = toeplitz(row)
        m1 = np.zeros((base_n, base_n))
        for k in range(2 * n):
            m1[k, k] = 1.0 / (2 * n)
        agg = np.zeros((n, base_n))
        for k in range(n):
            agg[k, 2 * k] = 0.5
            agg[k, 2 * k + 1] = 1.0
            agg[k, 2 * k + 2] = 0.5
        m2 = agg.T @ agg / n
        s11 = n * 2.0 * np.trace(m1 @ cov @ m1 @ cov)
        s12 = n * 2.0 * np.trace(m1 @ cov @ m2 @ cov)
        s22 = n * 2.0 * np.trace(m2 @ cov @ m2 @ cov)
        sig = sigma_tilde_one(H, h)
        assert s11 == pytest.approx(sig.s11, rel=0.02)
        assert s12 == pytest.approx(sig.s12, rel=0.02)
        assert s22 == pytest.approx(sig.s22, rel=0.02)

    def test_finite_n_variance_converges_upward(self):
        H, h = 0.3, 1.0
        sig = sigma_tilde_one(H, h, n_terms=20000)
        previous = 0.0
        for n in (2**6, 2**8, 2**10, 2**12):
            lags = np.arange(-2 * n + 1, 2 * n)
            weights = 1.0 - np.abs(lags) / (2.0 * n)
            finite = h ** (4 * H) * float(
                np.sum(weights * gamma(H, lags) * gamma(H, lags))
            )
            assert finite > previous
            previous = finite
        assert previous < sig.s11
        assert previous == pytest.approx(sig.s11, rel=1e-3)


class TestJacobian:
    def test_finite_differences(self):
        rng = np.random.default_rng(20)
        for _ in range(25):
            theta = NifbmParams(
                H=rng.uniform(0.05, 0.95),
                h=rng.uniform(0.3, 5.0),
                a2=rng.uniform(0.2, 8.0),
            )
            jac = jacobian_one(theta)
            step = 1e-6
            up = forward_moment_map_one(NifbmParams(theta.H + step, theta.h, theta.a2))
            dn = forward_moment_map_one(NifbmParams(theta.H - step, theta.h, theta.a2))
            assert jac.d11 == pytest.approx((up[0] - dn[0]) / (2 * step), rel=1e-5)
            assert jac.d21 == pytest.approx((up[1] - dn[1]) / (2 * step), rel=1e-5)
            up = forward_moment_map_one(NifbmParams(theta.H, theta.h, theta.a2 + step))
            dn = forward_moment_map_one(NifbmParams(theta.H, theta.h, theta.a2 - step))
            assert jac.d12 == pytest.approx((up[0] - dn[0]) / (2 * step), rel=1e-6)
            assert jac.d22 == pytest.approx((up[1] - dn[1]) / (2 * step), rel=1e-6)

    def test_det_closed_form_and_sign(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            theta = NifbmParams(
                H=rng.uniform(0.05, 0.95),
                h=rng.uniform(0.3, 5.0),
                a2=rng.uniform(0.2, 8.0),
            )
            det = jacobian_one(theta).det()
            assert det < 0.0
            assert det == pytest.approx(jacobian_one_det(theta), rel=1e-10)

    def test_df1_da2_display(self):
        theta = NifbmParams(0.5, 2.0, 3.0)
        expected = 2 * 2.0 * (2.0 - 1.0) / (2.0 * 1.5)
        assert jacobian_one(theta).d12 == pytest.approx(expected, rel=1e-14)


class TestSigma0:
    def test_symmetric_psd(self):
        for H in (0.1, 0.4, 0.7):
            for h in (1.0, 2.0):
                for a2 in (0.5, 4.0):
                    sig = sigma0_one(NifbmParams(H, h, a2))
                    assert sig[0, 1] == pytest.approx(sig[1, 0], rel=1e-12)
                    assert np.all(np.linalg.eigvalsh(sig) >= -1e-12)

    def test_hurst_variance_h_independent(self):
        # the Hurst block of the delta-method covariance depends on H
        # only: it is a function of a scale-free ratio statistic
        a = sigma0_one(NifbmParams(0.5, 1.0, 1.0))
        b = sigma0_one(NifbmParams(0.5, 16.0, 7.0))
        assert a[0, 0] == pytest.approx(b[0, 0], rel=1e-9)

    def test_h_too_large(self):
        with pytest.raises(HTooLargeError):
            sigma0_one(NifbmParams(0.8, 1.0, 1.0))

    def test_predicted_hurst_sd(self):
        # frozen value verified by Monte Carlo: sd of the Hurst
        # estimate at H=0.5, N=2**12 is about 0.00913
        sig = sigma0_one(NifbmParams(0.5, 2.0, 1.0))
        assert math.sqrt(sig[0, 0] / 2**12) == pytest.approx(0.00913, rel=1e-2)


class TestIsserlisMc:
    def test_cov_of_squares(self):
        # for jointly Gaussian (X1, X2): cov(X1^2, X2^2) = 2 cov(X1,X2)^2
        params = NifbmParams(0.7, 1.0)
        row = autocov_sequence(params, 1.0, 1, 2).values
        ell = np.linalg.cholesky(toeplitz(row))
        n_reps = 10**5
        z = np.random.default_rng(22).standard_normal((2, n_reps))
        x = ell @ z
        prod = x[0] ** 2 * x[1] ** 2
        emp = prod.mean() - (x[0] ** 2).mean() * (x[1] ** 2).mean()
        target = 2.0 * row[1] ** 2
        se = prod.std(ddof=1) / math.sqrt(n_reps)
        assert abs(emp - target) < 5.0 * se


class TestEmpiricalEstimatorCov:
    def test_one_process_matches_sigma0(self):
        theta = NifbmParams(0.5, 2.0, 1.0)
        emp, excluded = empirical_estimator_cov(theta, 2.0, 1024, 400, seed=30)
        ana = sigma0_one(theta)
        assert excluded < 20
        assert emp.shape == (2, 2)
        for i in (0, 1):
            assert emp[i, i] == pytest.approx(ana[i, i], rel=0.35)

    def test_two_process_psd(self):
        theta = MixedParams(0.5, 0.3, 4.0, 4.0)
        emp, excluded = empirical_estimator_cov(theta, 2.0, 512, 120, seed=31)
        assert emp.shape == (4, 4)
        assert np.allclose(emp, emp.T)
        assert np.all(np.linalg.eigvalsh(emp) >= -1e-9)
        assert 0 <= excluded < 120

    def test_replication_floor(self):
        with pytest.raises(ValueError):
            empirical_estimator_cov(NifbmParams(0.5, 1.0), 1.0, 64, 50)
