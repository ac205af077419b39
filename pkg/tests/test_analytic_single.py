"""Tests for closed-form single-link outage quantities."""

import math

import numpy as np
import pytest

from dcl import (
    ExponentialAttack,
    LogNormalFading,
    NeverAttack,
    RayleighFading,
    SingleChannelConfig,
    exact_outage_k1,
    high_snr_outage,
    optimal_k_high_snr,
    outage_lower_bound,
    outage_upper_bound,
)
from dcl.analytic_single import (
    RegimeWarning,
    high_snr_objective,
    high_snr_outage_geometric,
    low_snr_threshold,
)
from dcl.errors import PreconditionError, UnsupportedModelError

RAYLEIGH = RayleighFading()


def _cfg(K, R, P, attack=NeverAttack(), fading=RAYLEIGH):
    return SingleChannelConfig(K=K, R=R, P=P, fading=fading, attack=attack)


class TestExactK1:
    def test_never_attack_frozen(self):
        # 1 - exp(-(e-1)/10)
        assert exact_outage_k1(_cfg(1, 1.0, 10.0)) == pytest.approx(0.1578761479373566, abs=1e-12)

    def test_exponential_attack_frozen(self):
        cfg = _cfg(1, 1.0, 10.0, attack=ExponentialAttack(0.2))
        assert exact_outage_k1(cfg) == pytest.approx(0.310527304415821, abs=1e-12)

    def test_vanishing_power(self):
        assert exact_outage_k1(_cfg(1, 1.0, 1e-12)) == pytest.approx(1.0, abs=1e-9)

    def test_requires_k1(self):
        with pytest.raises(PreconditionError):
            exact_outage_k1(_cfg(2, 1.0, 10.0))


class TestBounds:
    def test_coincide_with_exact_at_k1(self):
        for attack in (NeverAttack(), ExponentialAttack(0.3)):
            cfg = _cfg(1, 0.7, 25.0, attack=attack)
            exact = exact_outage_k1(cfg)
            assert outage_lower_bound(cfg) == pytest.approx(exact, abs=1e-14)
            assert outage_upper_bound(cfg) == pytest.approx(exact, abs=1e-14)

    def test_frozen_two_block_values(self):
        cfg = _cfg(2, 1.0, 100.0)
        assert outage_lower_bound(cfg) == pytest.approx(2.90226508230219e-4, rel=1e-9)
        assert outage_upper_bound(cfg) == pytest.approx(3.83066181413960e-3, rel=1e-9)

    def test_lower_bound_limits_to_w0(self):
        cfg = _cfg(4, 1.0, 1e15, attack=ExponentialAttack(0.2))
        w0 = 1 - math.exp(-0.2)
        assert outage_lower_bound(cfg) == pytest.approx(w0, abs=1e-10)
        assert outage_upper_bound(cfg) == pytest.approx(w0, abs=1e-6)

    def test_ordering_on_grid(self):
        attacks = [NeverAttack(), ExponentialAttack(0.1), ExponentialAttack(0.5)]
        fadings = [RAYLEIGH, LogNormalFading()]
        for attack in attacks:
            for fading in fadings:
                for K in range(1, 11):
                    for R in (0.25, 0.5, 1.0):
                        for P in (10.0, 100.0, 1000.0):
                            cfg = _cfg(K, R, P, attack=attack, fading=fading)
                            assert outage_lower_bound(cfg) <= outage_upper_bound(cfg) + 1e-12

    def test_monotone_in_power_and_rate(self):
        attack = ExponentialAttack(0.2)
        for bound in (outage_lower_bound, outage_upper_bound):
            for K in (1, 3, 6):
                values_p = [bound(_cfg(K, 0.5, P, attack=attack)) for P in (5, 20, 80, 320)]
                assert all(a >= b - 1e-14 for a, b in zip(values_p, values_p[1:]))
                values_r = [bound(_cfg(K, R, 50.0, attack=attack)) for R in (0.2, 0.4, 0.8, 1.6)]
                assert all(a <= b + 1e-14 for a, b in zip(values_r, values_r[1:]))


class TestHighSnr:
    CFG = _cfg(2, 1.0, 1000.0, attack=ExponentialAttack(0.1))

    def test_frozen_value(self):
        assert high_snr_outage(self.CFG) == pytest.approx(0.09580545481083064, rel=1e-12)

    def test_floor_is_w0(self):
        w0 = 1 - math.exp(-0.1)
        for K in range(1, 12):
            cfg = _cfg(K, 1.0, 1000.0, attack=ExponentialAttack(0.1))
            assert high_snr_outage(cfg) >= w0

    def test_exponential_growth_dominates(self):
        v2 = high_snr_outage(_cfg(2, 1.0, 1000.0, attack=ExponentialAttack(0.1)))
        v10 = high_snr_outage(_cfg(10, 1.0, 1000.0, attack=ExponentialAttack(0.1)))
        assert v10 > 10 * v2

    def test_rejects_wrong_models(self):
        with pytest.raises(UnsupportedModelError):
            high_snr_outage(_cfg(2, 1.0, 1000.0, attack=ExponentialAttack(0.1),
                                 fading=LogNormalFading()))
        with pytest.raises(UnsupportedModelError):
            high_snr_outage(_cfg(2, 1.0, 1000.0, attack=NeverAttack()))

    def test_warns_at_low_power(self):
        with pytest.warns(RegimeWarning):
            high_snr_outage(_cfg(2, 1.0, 50.0, attack=ExponentialAttack(0.1)))

    def test_geometric_form_matches_truncation_gap(self):
        # the truncated form drops e^{KR} c (beta/P)^K / (1 - beta/P)
        cfg = _cfg(3, 1.0, 1000.0, attack=ExponentialAttack(0.1))
        beta = math.exp(-0.1)
        c = 1 - beta
        r = beta / 1000.0
        dropped = math.exp(3.0) * c * r**3 / (1 - r)
        assert high_snr_outage(cfg) - high_snr_outage_geometric(cfg) == pytest.approx(
            dropped, rel=1e-9)

    def test_discrete_convexity_of_truncated_form(self):
        import warnings

        cfg = _cfg(2, 1.0, 1000.0, attack=ExponentialAttack(0.1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            vals = [high_snr_outage(_cfg(K, 1.0, 1000.0, attack=ExponentialAttack(0.1)))
                    for K in range(1, 31)]
        second = np.diff(vals, 2)
        assert np.all(second >= -1e-12)


class TestOptimalK:
    def test_frozen_closed_form(self):
        cfg = _cfg(1, 1.0, 1000.0, attack=ExponentialAttack(0.1))
        summary = optimal_k_high_snr(cfg)
        assert summary.xi == pytest.approx(8.618464805239582e-05, rel=1e-12)
        assert summary.K_real == pytest.approx(1.5913897146992682, rel=1e-12)
        assert summary.K_int == 2
        assert summary.interior

    def test_integer_choice_is_grid_minimum_of_candidates(self):
        cfg = _cfg(1, 1.0, 1000.0, attack=ExponentialAttack(0.1))
        summary = optimal_k_high_snr(cfg)
        candidates = {max(1, math.floor(summary.K_real)), math.ceil(summary.K_real)}
        best = min(candidates, key=lambda k: high_snr_objective(cfg, k))
        assert summary.K_int == best

    def test_no_interior_minimum_flag(self):
        # R above lambda + log(P) makes the log argument nonpositive
        cfg = _cfg(1, 2.5, 2.0, attack=ExponentialAttack(0.1))
        summary = optimal_k_high_snr(cfg)
        assert not summary.interior
        assert summary.K_int == 1

    def test_interior_minimum_in_strong_power_regime(self):
        # P = 30 dB, R = 1, mean attack time 10: the scan has an interior minimum
        vals = [high_snr_objective(_cfg(1, 1.0, 1000.0, attack=ExponentialAttack(0.1)), K)
                for K in range(1, 16)]
        k_min = int(np.argmin(vals)) + 1
        assert 1 < k_min < 15
        assert k_min == 2


class TestLowSnrThreshold:
    @pytest.mark.parametrize("K,R,P,expected", [(4, 0.01, 0.1, 0.4), (1, 0.1, 0.1, 1.0),
                                                (5, 0.02, 0.05, 2.0)])
    def test_arithmetic(self, K, R, P, expected):
        assert low_snr_threshold(_cfg(K, R, P)) == pytest.approx(expected, rel=1e-12)
