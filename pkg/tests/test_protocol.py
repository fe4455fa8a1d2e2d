import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import d2d_amplitude, gaussian_channels, rate_channels
from d2dmam.protocol import (RatePoint, constrained_max_rate, evaluate, max_feasible_rate,
                             phase1_rate, phase1_rates, phase2_rate, phase2_rates,
                             required_successes, search_rate)
from d2dmam.solver import solve_maxmin
from oracles import brute_evaluate, exhaustive_max_rate, naive_quadratic_form

ONE = np.eye(1, dtype=complex)


@st.composite
def instances(draw, max_K=6, max_M=3):
    seed = draw(st.integers(0, 2**32 - 1))
    K = draw(st.integers(1, max_K))
    M = draw(st.integers(1, max_M))
    rng = np.random.default_rng(seed)
    ch = gaussian_channels(rng, K, M, d2d_scale=draw(st.sampled_from([0.3, 1.0, 3.0])))
    g = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    sigma = g @ g.conj().T
    sigma /= np.trace(sigma).real
    eps = draw(st.sampled_from([0.0, 0.1, 0.25, 1 / 3, 0.5, 0.8]))
    rho = draw(st.sampled_from([1.0, 10.0, 1000.0]))
    rho_ue = draw(st.sampled_from([0.0, 1.0, 100.0]))
    return ch, sigma, eps, rho, rho_ue


class TestRates:
    def test_phase1_unit_snr(self):
        assert phase1_rate([1.0], ONE, 1.0) == pytest.approx(1.0)

    def test_phase1_zero_snr(self):
        assert phase1_rate([1.0, 2.0], np.eye(2) / 2, 0.0) == 0.0

    def test_phase1_summation_oracle(self, rng):
        ch = gaussian_channels(rng, 4, 3)
        sigma = np.eye(3) / 3 + 0.05 * np.ones((3, 3))
        expected = [math.log2(1 + 7.0 * naive_quadratic_form(sigma, h)) for h in ch.downlink]
        np.testing.assert_allclose(phase1_rates(ch, sigma, 7.0), expected, rtol=1e-12)

    def test_phase2_single_relay(self):
        ch = rate_channels([0, 0], {(0, 1): math.sqrt(3)})
        assert phase2_rate(0, [1], ch, 1.0) == pytest.approx(2.0)

    def test_phase2_cancellation(self):
        ch = rate_channels([0, 0, 0], {(0, 1): 1.0, (0, 2): -1.0})
        assert phase2_rate(0, [1, 2], ch, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_phase2_empty(self):
        ch = rate_channels([1, 1], {(0, 1): 5.0})
        assert phase2_rate(0, [], ch, 1.0) == 0.0
        np.testing.assert_array_equal(phase2_rates(np.zeros(2, bool), ch, 1.0), 0.0)

    def test_phase2_vectorized_agrees(self, rng):
        ch = gaussian_channels(rng, 6, 2)
        mask = np.array([1, 0, 1, 1, 0, 0], dtype=bool)
        expected = [phase2_rate(k, np.flatnonzero(mask), ch, 4.0) for k in range(6)]
        np.testing.assert_allclose(phase2_rates(mask, ch, 4.0), expected, rtol=1e-12)

    def test_rate_point(self):
        assert RatePoint(3.0).outage_rate == 1.5
        assert RatePoint(3.0, two_phase=False).outage_rate == 3.0


class TestRequiredSuccesses:
    @pytest.mark.parametrize("K, eps, need", [(10, 0.1, 9), (50, 0.1, 45), (3, 1 / 3, 2),
                                              (7, 0.1, 7), (1, 0.0, 1), (4, 0.99, 1),
                                              (10, 0.7, 3)])
    def test_values(self, K, eps, need):
        assert required_successes(K, eps) == need

    @pytest.mark.parametrize("eps", [-0.1, 1.0, 2.0])
    def test_invalid(self, eps):
        with pytest.raises(ValueError):
            required_successes(5, eps)


class TestEvaluate:
    def test_zero_rate_everyone_succeeds(self, rng):
        ch = gaussian_channels(rng, 5, 2)
        assert evaluate(ch, np.zeros((2, 2)), 0.0, 1.0, 1.0).success_fraction == 1.0

    def test_rate_above_all_thresholds(self):
        ch = rate_channels([1.0, 2.0], {(0, 1): 100.0, (1, 0): 100.0})
        out = evaluate(ch, ONE, 2.5, 1.0, 1.0)
        assert out.relay_set == () and out.success_fraction == 0.0

    def test_hand_built_three_users(self):
        ch = rate_channels([3.0, 1.0, 0.5], {(1, 0): d2d_amplitude(5.0), (2, 0): d2d_amplitude(0.4)})
        out = evaluate(ch, ONE, 3.0, 1.0, 1.0)
        assert out.relay_set == (0,)
        np.testing.assert_array_equal(out.success_flags, [True, True, False])
        assert out.success_fraction == pytest.approx(2 / 3)
        _, relays, flags = brute_evaluate(ch, ONE, 3.0, 1.0, 1.0)
        assert relays == [0] and flags == [True, True, False]

    def test_threshold_is_inclusive(self):
        ch = rate_channels([2.0, 1.0])
        t = phase1_rates(ch, ONE, 1.0)
        assert evaluate(ch, ONE, float(t[0]), 1.0, 1.0).relay_set == (0,)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            evaluate(rate_channels([1.0]), ONE, -1.0, 1.0, 1.0)

    @given(instances(), st.floats(0, 12))
    def test_matches_brute_force(self, inst, r):
        ch, sigma, _, rho, rho_ue = inst
        out = evaluate(ch, sigma, r, rho, rho_ue)
        t, relays, flags = brute_evaluate(ch, sigma, r, rho, rho_ue)
        assert list(out.relay_set) == relays
        assert out.success_flags.tolist() == flags
        np.testing.assert_allclose(out.phase1_rates, t, rtol=1e-12, atol=1e-14)
        assert out.success_fraction == pytest.approx(np.mean(flags))

    @given(instances(), st.floats(0, 12), st.floats(0, 12))
    def test_relay_count_monotone_in_rate(self, inst, r1, r2):
        ch, sigma, _, rho, rho_ue = inst
        lo, hi = sorted((r1, r2))
        assert len(evaluate(ch, sigma, hi, rho, rho_ue).relay_set) <= \
            len(evaluate(ch, sigma, lo, rho, rho_ue).relay_set)

    def test_success_fraction_can_rise_with_rate(self):
        # a larger relay set can cancel the phase-2 sum: raising r from 2 to 3
        # drops UE 1 from the relays and lets UE 2 decode from UE 0 alone
        ch = rate_channels([3.0, 2.0, 0.0], {(1, 0): d2d_amplitude(5.0),
                                               (2, 0): d2d_amplitude(5.0),
                                               (2, 1): -d2d_amplitude(5.0)})
        low = evaluate(ch, ONE, 2.0, 1.0, 1.0)
        high = evaluate(ch, ONE, 3.0, 1.0, 1.0)
        assert low.success_count == 2 and high.success_count == 3


class TestRateSearch:
    def test_relay_rate_not_binding(self):
        ch = rate_channels([3.0, 1.0], {(1, 0): d2d_amplitude(5.0)})
        assert max_feasible_rate(ch, ONE, 0.0, 1.0, 1.0) == pytest.approx(3.0)

    def test_capped_by_d2d_link(self):
        ch = rate_channels([3.0, 1.0], {(1, 0): d2d_amplitude(2.0)})
        assert max_feasible_rate(ch, ONE, 0.0, 1.0, 1.0) == pytest.approx(2.0)

    def test_single_success_needed_gives_best_user(self, rng):
        ch = gaussian_channels(rng, 5, 2, d2d_scale=0.01)
        sigma = np.eye(2) / 2
        r = max_feasible_rate(ch, sigma, 4 / 5, 3.0, 1.0)
        assert r >= phase1_rates(ch, sigma, 3.0).max() - 1e-15

    def test_singleton_interval(self, rng):
        ch = gaussian_channels(rng, 4, 2)
        assert constrained_max_rate(ch, np.eye(2) / 2, 0.25, 5.0, 5.0, 0.3, 0.3) == 0.3

    def test_lower_above_upper(self, rng):
        with pytest.raises(ValueError):
            search_rate(gaussian_channels(rng, 2, 1), ONE, 0.0, 1.0, 1.0, 2.0, 1.0)

    def test_infeasible_interval_returns_lower(self):
        ch = rate_channels([1.0, 1.0])
        found = search_rate(ch, ONE, 0.0, 1.0, 1.0, lower=1.5, upper=4.0)
        assert not found.feasible and found.rate == 1.5

    @given(instances())
    def test_unrestricted_matches_exhaustive_oracle(self, inst):
        ch, sigma, eps, rho, rho_ue = inst
        r = max_feasible_rate(ch, sigma, eps, rho, rho_ue)
        assert r == pytest.approx(exhaustive_max_rate(ch, sigma, eps, rho, rho_ue), abs=1e-12)
        assert search_rate(ch, sigma, eps, rho, rho_ue, 0.0, math.inf).rate == r

    @given(instances(max_K=5), st.floats(0, 6), st.floats(0, 6))
    def test_interval_matches_exhaustive_oracle(self, inst, a, b):
        ch, sigma, eps, rho, rho_ue = inst
        lo, hi = sorted((a, b))
        found = search_rate(ch, sigma, eps, rho, rho_ue, lo, hi)
        expected = exhaustive_max_rate(ch, sigma, eps, rho, rho_ue, lo, hi)
        assert found.feasible == (expected is not None)
        assert found.rate == pytest.approx(lo if expected is None else expected, abs=1e-12)
        assert lo <= found.rate <= hi

    @given(instances())
    def test_result_is_feasible(self, inst):
        ch, sigma, eps, rho, rho_ue = inst
        need = required_successes(ch.K, eps)
        r = max_feasible_rate(ch, sigma, eps, rho, rho_ue)
        assert evaluate(ch, sigma, r, rho, rho_ue).success_count >= need
        assert sum(brute_evaluate(ch, sigma, r, rho, rho_ue)[2]) >= need

    def test_with_solver_covariance(self, rng):
        ch = gaussian_channels(rng, 6, 3)
        sigma = solve_maxmin(ch.downlink).sigma
        r = max_feasible_rate(ch, sigma, 0.2, 10.0, 10.0)
        assert r == pytest.approx(exhaustive_max_rate(ch, sigma, 0.2, 10.0, 10.0), abs=1e-12)
