"""Power allocation: constraint accounting, uniform search, GA contract,
non-convexity witnesses."""

import math

import numpy as np
import pytest

from photon_ofdm.allocation import (
    AllocationProblem,
    GAParams,
    aco_power_slope,
    constraint_curvature_dco,
    constraint_power,
    ga_allocate,
    nonconvexity_witness_aco,
    nonconvexity_witness_dco,
    uniform_allocate,
    witness_power_curve_dco,
)
from photon_ofdm.analytic import Scheme, WaveformConfig, mean_transmit_power
from photon_ofdm.channel import default_channel
from photon_ofdm.ofdm import build_frame, modulate, random_qam_symbols
from photon_ofdm.qfunc import gauss_phi


@pytest.fixture(scope="module")
def channel():
    return default_channel()


class TestConstraintPower:
    def test_dco_clip_free_regime_is_pure_bias(self):
        w = np.full(31, 1e-4)
        assert constraint_power(Scheme.DCO, w, 0.05, 10.0) == pytest.approx(0.05, rel=1e-9)

    def test_aco_clip_free_regime(self):
        w = np.full(16, 1e-3)
        sigma = math.sqrt(2 * 16) * 1e-3
        expected = sigma / math.sqrt(2 * math.pi)
        assert constraint_power(Scheme.ACO, w, 0.0, 10.0) == pytest.approx(expected, rel=1e-9)

    def test_zero_weights_degenerate(self):
        assert constraint_power(Scheme.DCO, np.zeros(31), 0.03, 0.5) == 0.03
        assert constraint_power(Scheme.DCO, np.zeros(31), 0.9, 0.5) == 0.5
        assert constraint_power(Scheme.ACO, np.zeros(16), 0.0, 0.5) == 0.0

    def test_matches_clipped_waveform_monte_carlo(self):
        rng = np.random.default_rng(0)
        for scheme, ndata, b in ((Scheme.DCO, 31, 0.3), (Scheme.ACO, 16, 0.0)):
            w = np.full(ndata, 0.17)
            sigma = math.sqrt(2 * ndata) * 0.17
            y_max = 1.8 * sigma
            frames = 1_000_000 // 64
            wf = WaveformConfig.uniform(scheme, 64, 0.17, epsilon_top=y_max / sigma,
                                        epsilon_bias=b / sigma if b else None)
            y = modulate(build_frame(wf, random_qam_symbols(rng, (frames, ndata))))
            clipped = np.clip(y + b, 0.0, y_max)
            assert constraint_power(scheme, w, b, y_max) == pytest.approx(
                clipped.mean(), rel=0.005)

    def test_agrees_with_mean_transmit_power_on_strict_domain(self):
        wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.1, epsilon_top=3.0, epsilon_bias=1.2)
        via_config = mean_transmit_power(Scheme.DCO, wf)
        via_weights = constraint_power(Scheme.DCO, wf.weight_array, wf.b_dc, wf.y_max)
        assert via_weights == pytest.approx(via_config, rel=1e-12)


class TestUniformAllocate:
    def test_solution_is_feasible_and_uniform(self, channel):
        prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.1, y_max=0.2)
        sol = uniform_allocate(prob)
        assert sol.feasible
        assert sol.method == "uniform"
        assert np.allclose(sol.weights, sol.weights[0])
        assert sol.power <= 0.1 + 1e-9
        assert 0.0 < sol.b_dc < 0.2

    def test_rate_vanishes_with_budget(self, channel):
        rates = []
        for p in (1e-7, 1e-5, 1e-3):
            prob = AllocationProblem(Scheme.ACO, 64, channel, p_tmax=p, y_max=0.5)
            rates.append(uniform_allocate(prob).total_rate)
        assert rates[0] < rates[1] < rates[2]
        assert rates[0] < 1e-2

    def test_infeasible_problem_rejected(self, channel):
        with pytest.raises(ValueError):
            AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.0, y_max=0.5)

    def test_grid_resolution_refinement_never_degrades(self, channel):
        for scheme in (Scheme.DCO, Scheme.ACO):
            prob = AllocationProblem(scheme, 64, channel, p_tmax=0.1, y_max=0.3)
            coarse = uniform_allocate(prob, grid_resolution=60).total_rate
            fine = uniform_allocate(prob, grid_resolution=120).total_rate
            assert fine >= coarse - 1e-7 * abs(coarse)

    def test_minimum_grid_resolution_enforced(self, channel):
        prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.1, y_max=0.3)
        with pytest.raises(ValueError):
            uniform_allocate(prob, grid_resolution=40)

    def test_deterministic(self, channel):
        prob = AllocationProblem(Scheme.ACO, 64, channel, p_tmax=0.1, y_max=0.7)
        a = uniform_allocate(prob)
        b = uniform_allocate(prob)
        assert a.total_rate == b.total_rate
        assert np.array_equal(a.weights, b.weights)


class TestGaAllocate:
    def test_bit_reproducible(self, channel):
        prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.1, y_max=0.5)
        params = GAParams(population=80, generations=12)
        a = ga_allocate(prob, params, seed=99)
        b = ga_allocate(prob, params, seed=99)
        assert a.total_rate == b.total_rate
        assert np.array_equal(a.weights, b.weights)
        assert a.b_dc == b.b_dc

    def test_solution_feasible(self, channel):
        prob = AllocationProblem(Scheme.ACO, 64, channel, p_tmax=0.1, y_max=0.4)
        sol = ga_allocate(prob, GAParams(population=80, generations=12), seed=4)
        assert sol.feasible
        assert sol.power <= 0.1 + 1e-9
        assert sol.b_dc is None

    def test_never_worse_than_best_initial_individual(self, channel):
        # zero generations returns exactly the best feasible initial individual
        prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.1, y_max=0.5)
        init_best = ga_allocate(prob, GAParams(population=200, generations=0), seed=7)
        evolved = ga_allocate(prob, GAParams(population=200, generations=25), seed=7)
        assert evolved.total_rate >= init_best.total_rate

    def test_tracks_uniform_at_reduced_budget(self, channel):
        prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.1, y_max=0.3)
        uni = uniform_allocate(prob)
        ga = ga_allocate(prob, GAParams(population=200, generations=40), seed=20260811)
        assert ga.total_rate >= uni.total_rate * 0.97

    def test_params_validation(self):
        with pytest.raises(ValueError):
            GAParams(population=101)
        with pytest.raises(ValueError):
            GAParams(precision_bits=0)
        with pytest.raises(ValueError):
            GAParams(generation_gap=0.0)

    def test_unreachable_power_budget_reported(self, channel):
        # budget below the smallest representable nonzero allocation: the
        # init warns, evolution cannot help, the final result raises
        prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=1e-9, y_max=0.5)
        with pytest.warns(RuntimeWarning, match="no feasible individual"):
            with pytest.raises(RuntimeError):
                ga_allocate(prob, GAParams(population=40, generations=2,
                                           init_resample=2), seed=0)


class TestRateSaturation:
    def test_dco_saturates_near_quarter_watt(self, channel):
        rates = {}
        for peak in (0.10, 0.20, 0.25, 0.30, 0.60):
            prob = AllocationProblem(Scheme.DCO, 64, channel, p_tmax=0.1, y_max=peak)
            rates[peak] = uniform_allocate(prob).total_rate
        assert rates[0.20] > rates[0.10] * 1.05
        assert rates[0.30] < rates[0.25] * 1.02  # flattened
        assert rates[0.60] == pytest.approx(rates[0.30], rel=0.01)

    def test_aco_saturates_near_one_watt(self, channel):
        rates = {}
        for peak in (0.50, 1.00, 1.20):
            prob = AllocationProblem(Scheme.ACO, 64, channel, p_tmax=0.1, y_max=peak)
            rates[peak] = uniform_allocate(prob).total_rate
        assert rates[1.00] > rates[0.50] * 1.05
        assert rates[1.20] == pytest.approx(rates[1.00], rel=0.01)


class TestWitnessDco:
    def test_closed_form_value_at_reference_point(self):
        closed, fd = nonconvexity_witness_dco(2.0, 1.0, return_parts=True)
        assert closed == pytest.approx(-float(gauss_phi(1.0)), rel=1e-12)
        assert closed == pytest.approx(-0.241971, rel=1e-5)
        assert fd == pytest.approx(closed, rel=1e-4)

    def test_linear_in_sigma_y(self):
        a = nonconvexity_witness_dco(2.0, 1.0)
        b = nonconvexity_witness_dco(2.0, 3.7)
        assert b == pytest.approx(3.7 * a, rel=1e-9)

    def test_negative_over_grid(self):
        for et in (1.5, 2.0, 3.0, 4.5, 6.0):
            assert nonconvexity_witness_dco(et, 1.0) < 0.0

    def test_rejects_top_level_at_or_below_one(self):
        with pytest.raises(ValueError):
            nonconvexity_witness_dco(1.0)
        with pytest.raises(ValueError):
            nonconvexity_witness_dco(0.5)

    def test_witness_curve_differs_from_measured_power_by_top_clip_term(self):
        # the two mean-power models coincide once the top clip is inactive
        for eb in (0.5, 1.5, 2.5):
            a = float(witness_power_curve_dco(eb, eb + 30.0))
            wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.1, epsilon_top=eb + 30.0,
                                        epsilon_bias=eb)
            b = mean_transmit_power(Scheme.DCO, wf) / wf.sigma_y
            assert a == pytest.approx(b, rel=1e-9)

    def test_measured_power_curvature_changes_sign(self):
        # the measured power curve is convex below the symmetric window and
        # concave above it; the sign change is the non-convexity in nature
        assert constraint_curvature_dco(0.4, 2.0) > 0.0
        assert constraint_curvature_dco(1.6, 2.0) < 0.0


class TestWitnessAco:
    def test_reference_point_negative_and_fd_consistent(self):
        weights = np.zeros(16)
        weights[3] = 0.25
        closed, fd = nonconvexity_witness_aco(0.5, weights, 3, return_parts=True)
        assert closed < 0.0
        assert fd == pytest.approx(closed, rel=1e-4)

    def test_sign_invariant_under_weight_scaling(self):
        for scale in (0.5, 1.0, 2.0, 4.0):
            weights = np.zeros(16)
            weights[0] = 0.25 * scale
            assert nonconvexity_witness_aco(0.5, weights, 0) < 0.0

    def test_multiple_nonzero_weights_rejected(self):
        weights = np.full(16, 0.1)
        with pytest.raises(ValueError):
            nonconvexity_witness_aco(0.5, weights, 0)

    def test_zero_probe_weight_rejected(self):
        with pytest.raises(ValueError):
            nonconvexity_witness_aco(0.5, np.zeros(16), 0)

    def test_power_slope_limit_at_vanishing_scale(self):
        # as the waveform scale vanishes the slope approaches 1/sqrt(2 pi)
        assert aco_power_slope(1e-6, 0.5) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)
        # and flattens once the top clip bites
        assert aco_power_slope(5.0, 0.5) < 0.02
