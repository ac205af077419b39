"""Tests for parallel-channel moments, Gaussian approximations, and exponents."""

import math
import warnings

import numpy as np
import pytest

from dcl import (
    ExponentialAttack,
    IdenticalFading,
    NeverAttack,
    ParallelConfig,
    RayleighFading,
    RngStream,
    estimate_outage_parallel,
    gaussian_outage_indep,
    gaussian_outage_mdep,
    mgf_Y,
    nu_m,
    outage_exponent_indep,
    outage_exponent_mdep,
    y_moments,
)
from dcl.analytic_single import RegimeWarning
from dcl.channel_model import surviving_from_uniforms
from dcl.errors import DomainError, OutOfRegimeError, PreconditionError, UnsupportedModelError
from dcl.parallel_asym import ExponentKind, y_lower_quantile

RAYLEIGH = RayleighFading()
ATTACK5 = ExponentialAttack(0.2)

MU_Y = 0.5710141680992622
VAR_Y = 0.2693443250905025
NU_1 = 0.5175707114435425


def _simulate_y(n, seed, K=5, attack=ATTACK5, fading=RAYLEIGH):
    gen = RngStream(seed=seed).generator()
    L = surviving_from_uniforms(attack, K, gen.random(n))
    gains = fading.gains_from_uniforms(gen.random((n, K)))
    cum = np.concatenate([np.zeros((n, 1)), np.cumsum(gains, axis=1)], axis=1)
    return cum[np.arange(n), L] / K


class TestYMoments:
    def test_frozen_reference_setup(self):
        mom = y_moments(RAYLEIGH, ATTACK5, 5)
        assert mom.mu == pytest.approx(MU_Y, abs=1e-12)
        assert mom.var == pytest.approx(VAR_Y, abs=1e-12)

    def test_against_simulation(self):
        y = _simulate_y(1_000_000, seed=71)
        assert abs(y.mean() - MU_Y) <= 3 * math.sqrt(VAR_Y / 1_000_000)
        var_se = y.var() * math.sqrt(2.0 / 1_000_000) * 2  # rough variance-of-variance
        assert abs(y.var() - VAR_Y) <= 3 * var_se

    def test_never_attack_degenerate_count(self):
        mom = y_moments(RAYLEIGH, NeverAttack(), 5)
        assert mom.mu == pytest.approx(1.0)
        assert mom.var == pytest.approx(1.0 / 5.0)

    def test_identical_fading_rejected(self):
        with pytest.raises(UnsupportedModelError):
            y_moments(IdenticalFading(RAYLEIGH), ATTACK5, 5)


class TestNuM:
    def test_frozen_value(self):
        mom = nu_m(RAYLEIGH, ATTACK5, 5, 1, 0.8)
        assert mom.nu == pytest.approx(NU_1, abs=1e-12)
        assert len(mom.gamma) == 1

    def test_gamma_closed_form(self):
        from dcl import surviving_moments

        mu_l, var_l = surviving_moments(ATTACK5, 5)
        mom = nu_m(RAYLEIGH, ATTACK5, 5, 2, 0.4)
        assert mom.gamma[0] == pytest.approx((0.4 * var_l + mu_l**2) / 25.0, rel=1e-12)

    def test_zero_rho_or_range_reduces_to_variance(self):
        assert nu_m(RAYLEIGH, ATTACK5, 5, 3, 0.0).nu == pytest.approx(VAR_Y, abs=1e-15)
        assert nu_m(RAYLEIGH, ATTACK5, 5, 0, 0.9).nu == pytest.approx(VAR_Y, abs=1e-15)

    def test_covariance_against_copula_simulation(self):
        # lag-1 covariance of Y equals mu_alpha^2 rho sigma_L^2 / K^2 at the
        # correlation the copula actually realizes
        from dcl.monte_carlo import _banded_cholesky, calibrate_latent_correlation
        from scipy.special import ndtr

        cal = calibrate_latent_correlation(ATTACK5, 5, 1, 0.3)
        n, N = 400_000, 8
        gen = RngStream(seed=83).generator()
        z = gen.standard_normal((n, N)) @ _banded_cholesky(N, 1, cal.rho_z).T
        L = np.minimum(np.floor(ATTACK5.inverse_cdf(ndtr(z))), 5.0).astype(np.int64)
        gains = RAYLEIGH.gains_from_uniforms(gen.random((n, N, 5)))
        cum = np.concatenate([np.zeros((n, N, 1)), np.cumsum(gains, axis=2)], axis=2)
        y = np.take_along_axis(cum, L[:, :, None], axis=2)[:, :, 0] / 5.0
        cov_lag1 = np.mean(y[:, :-1] * y[:, 1:]) - y.mean() ** 2
        from dcl import surviving_moments

        _, var_l = surviving_moments(ATTACK5, 5)
        expected = cal.achieved * var_l / 25.0
        assert cov_lag1 == pytest.approx(expected, abs=3e-3)


class TestGaussianOutage:
    def _pcfg(self, N, R, m=0, rho=0.0):
        return ParallelConfig(N=N, K=5, P=2.0, R=R, fading=RAYLEIGH, attack=ATTACK5,
                              m=m, rho=rho)

    def test_frozen_values(self):
        assert gaussian_outage_indep(self._pcfg(100, 0.5)) == pytest.approx(3.0966e-10, rel=1e-3)
        assert gaussian_outage_mdep(self._pcfg(100, 0.5, m=1, rho=0.8)) == pytest.approx(
            4.058e-6, rel=1e-3)

    def test_at_threshold_half(self):
        R_at_mu = MU_Y * 2.0
        assert gaussian_outage_indep(self._pcfg(400, R_at_mu)) == pytest.approx(0.5, abs=1e-12)
        assert gaussian_outage_mdep(self._pcfg(400, R_at_mu, m=1, rho=0.8)) == pytest.approx(
            0.5, abs=1e-12)

    def test_limits_in_n(self):
        below = [gaussian_outage_indep(self._pcfg(N, 0.5)) for N in (50, 200, 800)]
        assert below[0] > below[1] > below[2]
        above = [gaussian_outage_indep(self._pcfg(N, 1.6)) for N in (50, 200, 800)]
        assert above[0] < above[1] < above[2]
        assert above[2] > 0.999999

    def test_dependence_never_helps(self):
        for N in (50, 100, 400):
            ind = gaussian_outage_indep(self._pcfg(N, 0.5))
            dep = gaussian_outage_mdep(self._pcfg(N, 0.5, m=1, rho=0.8))
            assert dep >= ind

    def test_zero_rho_equals_independent(self):
        assert gaussian_outage_mdep(self._pcfg(100, 0.5, m=1, rho=0.0)) == pytest.approx(
            gaussian_outage_indep(self._pcfg(100, 0.5)), abs=1e-15)

    def test_small_n_warns(self):
        with pytest.warns(RegimeWarning):
            gaussian_outage_indep(self._pcfg(5, 0.5))


class TestMgf:
    def test_normalized_at_zero(self):
        assert mgf_Y(RAYLEIGH, ATTACK5, 5, 0.0) == 1.0

    def test_frozen_value(self):
        # direct summation of w_i (1 + 0.2)^-i
        assert mgf_Y(RAYLEIGH, ATTACK5, 5, -1.0) == pytest.approx(0.6340184475292894, rel=1e-12)

    def test_against_sample_mean(self):
        y = _simulate_y(1_000_000, seed=71)
        emp = np.exp(-y)
        assert abs(emp.mean() - mgf_Y(RAYLEIGH, ATTACK5, 5, -1.0)) <= 3 * emp.std() / 1000.0

    def test_derivatives_at_zero_match_moments(self):
        h = 1e-5
        d1 = (math.log(mgf_Y(RAYLEIGH, ATTACK5, 5, h))
              - math.log(mgf_Y(RAYLEIGH, ATTACK5, 5, -h))) / (2 * h)
        assert d1 == pytest.approx(MU_Y, rel=1e-5)
        d2 = (math.log(mgf_Y(RAYLEIGH, ATTACK5, 5, h))
              - 2 * math.log(mgf_Y(RAYLEIGH, ATTACK5, 5, 0.0))
              + math.log(mgf_Y(RAYLEIGH, ATTACK5, 5, -h))) / h**2
        assert d2 == pytest.approx(VAR_Y, rel=1e-4)

    def test_domain_error_at_pole(self):
        with pytest.raises(DomainError):
            mgf_Y(RAYLEIGH, ATTACK5, 5, 5.0)

    def test_requires_rayleigh(self):
        from dcl import LogNormalFading

        with pytest.raises(UnsupportedModelError):
            mgf_Y(LogNormalFading(), ATTACK5, 5, -1.0)


class TestExponents:
    def test_zero_exactly_at_threshold(self):
        mom = y_moments(RAYLEIGH, ATTACK5, 5)
        res = outage_exponent_indep(RAYLEIGH, ATTACK5, 5, mom.mu)
        assert res.value == 0.0
        assert res.s_star == 0.0
        assert res.kind is ExponentKind.INDEPENDENT_LDP

    def test_golden_section_matches_dense_grid(self):
        res = outage_exponent_indep(RAYLEIGH, ATTACK5, 5, 0.25)
        s = np.linspace(-50.0, 0.0, 100_001)
        grid = (s * 0.25 - np.log(mgf_Y(RAYLEIGH, ATTACK5, 5, s))).max()
        assert abs(res.value - grid) <= 1e-6
        assert res.value == pytest.approx(0.2461213350, abs=1e-8)
        assert res.s_star == pytest.approx(-1.8062, abs=1e-3)

    def test_decreasing_in_t(self):
        values = [outage_exponent_indep(RAYLEIGH, ATTACK5, 5, t).value
                  for t in (0.1, 0.25, 0.4, 0.5, MU_Y)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] == 0.0

    def test_out_of_regime(self):
        with pytest.raises(OutOfRegimeError):
            outage_exponent_indep(RAYLEIGH, ATTACK5, 5, 0.6)
        with pytest.raises(OutOfRegimeError):
            outage_exponent_mdep(RAYLEIGH, ATTACK5, 5, 1, 0.8, MU_Y)
        with pytest.raises(DomainError):
            outage_exponent_indep(RAYLEIGH, ATTACK5, 5, 0.0)

    def test_mdep_frozen_value(self):
        res = outage_exponent_mdep(RAYLEIGH, ATTACK5, 5, 1, 0.8, 0.3)
        assert res.value == pytest.approx(0.0709552121928243, rel=1e-10)
        assert res.kind is ExponentKind.MDEP_GAUSSIAN_BOUND
        assert res.s_star <= 0.0

    def test_mdep_with_zero_range_is_gaussian_bound_of_independent(self):
        a = outage_exponent_mdep(RAYLEIGH, ATTACK5, 5, 0, 0.0, 0.3).value
        assert a == pytest.approx((MU_Y - 0.3) ** 2 / (2 * VAR_Y), rel=1e-12)
        b = outage_exponent_mdep(RAYLEIGH, ATTACK5, 5, 1, 0.0, 0.3).value
        assert a == pytest.approx(b, rel=1e-12)

    def test_ldp_dominates_gaussian_bounds(self):
        for t in (0.1, 0.2, 0.3, 0.4, 0.5):
            ldp = outage_exponent_indep(RAYLEIGH, ATTACK5, 5, t).value
            gauss = outage_exponent_mdep(RAYLEIGH, ATTACK5, 5, 0, 0.0, t).value
            mdep = outage_exponent_mdep(RAYLEIGH, ATTACK5, 5, 1, 0.8, t).value
            assert ldp >= gauss >= mdep

    def test_longer_mean_attack_time_raises_exponents(self):
        ind, dep = [], []
        for inv_lambda in (3.0, 5.0, 10.0):
            attack = ExponentialAttack(1.0 / inv_lambda)
            ind.append(outage_exponent_indep(RAYLEIGH, attack, 5, 0.25).value)
            dep.append(outage_exponent_mdep(RAYLEIGH, attack, 5, 1, 0.8, 0.25).value)
        assert ind[0] < ind[1] < ind[2]
        assert dep[0] < dep[1] < dep[2]

    def test_low_t_quantile_flag_threshold(self):
        # Pr(L = 0) = 0.18 here, so the 1e-3 quantile of Y sits at the atom
        assert y_lower_quantile(RAYLEIGH, ATTACK5, 5) == 0.0
        res = outage_exponent_indep(RAYLEIGH, ATTACK5, 5, 0.01)
        assert not res.below_support_quantile
        # an almost-sure survivor pushes the quantile strictly positive
        rare = ExponentialAttack(1e-5)
        assert y_lower_quantile(RAYLEIGH, rare, 5) > 0.0
        flagged = outage_exponent_indep(RAYLEIGH, rare, 5, 1e-4)
        assert flagged.below_support_quantile


class TestLargeDeviationSanity:
    def test_mc_decay_rate_brackets_exponent(self):
        # Chernoff direction: -log(p)/N sits above the exponent and tightens
        # as N grows; resolvable N here is limited by p itself
        mom = y_moments(RAYLEIGH, ATTACK5, 5)
        t = 0.6 * mom.mu
        analytic = outage_exponent_indep(RAYLEIGH, ATTACK5, 5, t).value
        rates = {}
        for N in (25, 50):
            pcfg = ParallelConfig(N=N, K=5, P=2.0, R=t * 2.0, fading=RAYLEIGH, attack=ATTACK5)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                est = estimate_outage_parallel(pcfg, 400_000, seed=61)
            assert est.p_hat > 0
            rates[N] = -math.log(est.p_hat) / N
        assert rates[25] > analytic
        assert rates[50] > analytic
        assert abs(rates[50] - analytic) < abs(rates[25] - analytic)
        assert rates[50] <= 1.3 * analytic
