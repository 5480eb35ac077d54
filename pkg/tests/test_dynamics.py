"""Success branch, success probability, and failure-branch density."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cheshire.dynamics import (
    BranchWeights,
    JointMeterState,
    classical_mixture_density,
    classical_mixture_moment,
    failure_density,
    grid_moments,
    success_moments,
    success_probability,
)
from cheshire.errors import ConsistencyError, ValidationError
from cheshire.meter import Grid, GridMeter, gaussian_ground_state
from cheshire.qsystem import PhotonKet, TransitionAmplitudes, transition_amplitudes

from conftest import unit_kets

EXAMPLE_AMPS = TransitionAmplitudes(1 / 3, 1 / 3, -1 / 3)
P_EXAMPLE_G2 = 0.3032588259474194  # 1/3 - (2/9) e^{-2}

SMALL_GRID = Grid(-12.0, 12.0, 1201)

couplings = st.floats(min_value=0.0, max_value=3.0, allow_nan=False)


class TestBranchWeights:
    def test_from_preparation(self, example_prep):
        w = BranchWeights.from_preparation(example_prep)
        assert np.isclose(w.a, 1 / math.sqrt(3))
        assert np.isclose(w.b, 1 / math.sqrt(3))
        assert np.isclose(w.c, 1 / math.sqrt(3))

    def test_left_weight_collects_both_polarizations(self):
        prep = PhotonKet.normalized([1.0, 1.0, 1.0, 1.0])
        w = BranchWeights.from_preparation(prep)
        assert np.isclose(w.a, math.sqrt(0.5))
        assert np.isclose(sum(w.probabilities), 1.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError):
            BranchWeights(1.0, 1.0, 0.0)
        with pytest.raises(ValidationError):
            BranchWeights.from_preparation(PhotonKet([1.0, 1.0, 0.0, 0.0]))


class TestSuccessProbability:
    def test_zero_coupling_is_overlap_squared(self, example_prep, example_post):
        amps = transition_amplitudes(example_prep, example_post)
        p = success_probability(amps, 0.0, 0.0)
        assert np.isclose(p, abs(example_post.overlap(example_prep)) ** 2, atol=1e-14)
        assert np.isclose(p, 1.0 / 9.0, atol=1e-14)

    def test_infinite_coupling_kills_cross_terms(self):
        p = success_probability(EXAMPLE_AMPS, math.inf, math.inf)
        assert np.isclose(p, 1.0 / 3.0, atol=1e-15)

    def test_example_closed_form(self):
        assert np.isclose(success_probability(EXAMPLE_AMPS, 2.0, 2.0), P_EXAMPLE_G2, atol=1e-15)

    def test_matches_grid_oracle(self):
        state = JointMeterState.gaussian(EXAMPLE_AMPS, 2.0, 2.0)
        assert abs(grid_moments(state).norm - P_EXAMPLE_G2) < 1e-8

    def test_inconsistent_amplitudes_raise(self):
        with pytest.raises(ConsistencyError):
            success_probability(TransitionAmplitudes(1.0, 1.0, 0.0), 0.1, 0.1)

    def test_negative_coupling_rejected(self):
        with pytest.raises(ValidationError):
            success_probability(EXAMPLE_AMPS, -1.0, 2.0)

    @given(prep=unit_kets(), post=unit_kets(), g_a=couplings, g_b=couplings)
    def test_bounded_for_physical_inputs(self, prep, post, g_a, g_b):
        p = success_probability(transition_amplitudes(prep, post), g_a, g_b)
        assert 0.0 <= p <= 1.0


class TestSuccessMoments:
    def test_example_values(self):
        m = success_moments(EXAMPLE_AMPS, 2.0, 2.0)
        assert np.isclose(m.norm, P_EXAMPLE_G2, atol=1e-15)
        assert np.isclose(m.x, 2.0 / 9.0, atol=1e-15)
        assert np.isclose(m.y, (4.0 / 9.0) / math.e, atol=1e-15)
        assert np.isclose(m.xy, (4.0 / 9.0) / math.e, atol=1e-15)

    def test_matches_grid_oracle(self):
        state = JointMeterState.gaussian(EXAMPLE_AMPS, 2.0, 2.0)
        grid = grid_moments(state)
        closed = success_moments(EXAMPLE_AMPS, 2.0, 2.0)
        assert abs(grid.norm - closed.norm) < 1e-8
        assert abs(grid.x - closed.x) < 1e-8
        assert abs(grid.y - closed.y) < 1e-8
        assert abs(grid.xy - closed.xy) < 1e-8

    @given(prep=unit_kets(), post=unit_kets(), g_a=couplings, g_b=couplings)
    @settings(max_examples=25)
    def test_random_states_match_grid(self, prep, post, g_a, g_b):
        amps = transition_amplitudes(prep, post)
        closed = success_moments(amps, g_a, g_b)
        state = JointMeterState.gaussian(amps, g_a, g_b)
        grid = grid_moments(state, SMALL_GRID, SMALL_GRID)
        assert abs(grid.norm - closed.norm) < 1e-8
        assert abs(grid.xy - closed.xy) < 1e-8


class TestJointMeterState:
    def test_zero_coupling_factorizes(self, example_prep, example_post):
        amps = transition_amplitudes(example_prep, example_post)
        state = JointMeterState.gaussian(amps, 0.0, 0.0)
        x = np.linspace(-3, 3, 7)
        f = state.evaluate(x[:, None], x[None, :])
        expected = amps.total * np.outer(gaussian_ground_state(x), gaussian_ground_state(x))
        assert np.allclose(f, expected, atol=1e-15)

    def test_pointwise_formula(self):
        state = JointMeterState.gaussian(EXAMPLE_AMPS, 2.0, 1.0)
        x, y = 0.7, -0.4
        expected = (
            EXAMPLE_AMPS.l * gaussian_ground_state(x - 2.0) * gaussian_ground_state(y)
            + EXAMPLE_AMPS.r_plus * gaussian_ground_state(x) * gaussian_ground_state(y - 1.0)
            + EXAMPLE_AMPS.r_minus * gaussian_ground_state(x) * gaussian_ground_state(y + 1.0)
        )
        assert np.isclose(complex(state.evaluate(x, y)[0]), expected, atol=1e-15)

    def test_success_probability_method(self):
        state = JointMeterState.gaussian(EXAMPLE_AMPS, 2.0, 2.0)
        assert np.isclose(state.success_probability(), P_EXAMPLE_G2, atol=1e-15)

    def test_grid_meter_state_matches_gaussian(self):
        meter = GridMeter.gaussian()
        state = JointMeterState(EXAMPLE_AMPS, meter, meter, 2.0, 2.0)
        assert abs(state.success_probability() - P_EXAMPLE_G2) < 1e-8

    def test_meter_coupling_mismatch_rejected(self):
        from cheshire.meter import GaussianMeter

        with pytest.raises(ValidationError):
            JointMeterState(EXAMPLE_AMPS, GaussianMeter(1.0), GaussianMeter(2.0), 2.0, 2.0)


class TestClassicalMixture:
    def test_cross_moment_always_zero(self):
        w = BranchWeights(0.5, 0.5, math.sqrt(0.5))
        assert classical_mixture_moment(w, "x", "x", 2.0, 3.0) == 0.0

    def test_left_branch_mean(self):
        w = BranchWeights(1.0, 0.0, 0.0)
        assert classical_mixture_moment(w, "x", "1", 2.5, 1.0) == 2.5
        assert classical_mixture_moment(w, "1", "x", 2.5, 1.0) == 0.0

    def test_right_plus_branch_mean(self):
        w = BranchWeights(0.0, 1.0, 0.0)
        assert classical_mixture_moment(w, "1", "x", 2.5, 1.5) == 1.5

    def test_right_minus_branch_mean(self):
        w = BranchWeights(0.0, 0.0, 1.0)
        assert classical_mixture_moment(w, "1", "x", 2.5, 1.5) == -1.5

    def test_normalization(self):
        w = BranchWeights(0.6, 0.0, 0.8)
        assert classical_mixture_moment(w, "1", "1", 2.0, 2.0) == 1.0

    def test_density_integrates_to_one(self):
        w = BranchWeights(0.6, 0.8j, 0.0)
        p = classical_mixture_density(w, 2.0, 2.0, SMALL_GRID, SMALL_GRID)
        dx = SMALL_GRID.spacing
        assert np.isclose(np.trapezoid(np.trapezoid(p, dx=dx), dx=dx), 1.0, atol=1e-10)

    def test_bad_weight_label(self):
        w = BranchWeights(1.0, 0.0, 0.0)
        with pytest.raises(ValidationError):
            classical_mixture_moment(w, "x^2", "1", 1.0, 1.0)


class TestFailureDensity:
    def test_example_partition(self, example_prep, example_post):
        amps = transition_amplitudes(example_prep, example_post)
        weights = BranchWeights.from_preparation(example_prep)
        branch = failure_density(amps, weights, 2.0, 2.0, SMALL_GRID, SMALL_GRID)
        assert abs(branch.total_probability - (1.0 - P_EXAMPLE_G2)) < 1e-8
        assert branch.density.min() >= 0.0

    def test_cross_moment_antisymmetry(self, example_prep, example_post):
        amps = transition_amplitudes(example_prep, example_post)
        weights = BranchWeights.from_preparation(example_prep)
        branch = failure_density(amps, weights, 2.0, 2.0, SMALL_GRID, SMALL_GRID)
        success_xy = success_moments(amps, 2.0, 2.0).xy
        assert abs(branch.moment("x", "x") + success_xy) < 1e-8

    def test_certain_failure_is_left_branch_density(self):
        # preparation entirely in the left arm, postselection orthogonal
        weights = BranchWeights(1.0, 0.0, 0.0)
        amps = TransitionAmplitudes(0.0, 0.0, 0.0)
        branch = failure_density(amps, weights, 2.0, 1.0, SMALL_GRID, SMALL_GRID)
        assert abs(branch.total_probability - 1.0) < 1e-8
        x = SMALL_GRID.points
        expected = np.outer(gaussian_ground_state(x - 2.0) ** 2, gaussian_ground_state(x) ** 2)
        assert np.allclose(branch.density, expected, atol=1e-12)

    def test_identical_states_weak_limit(self, example_prep):
        amps = transition_amplitudes(example_prep, example_prep)
        weights = BranchWeights.from_preparation(example_prep)
        branch = failure_density(amps, weights, 0.01, 0.01, SMALL_GRID, SMALL_GRID)
        assert branch.total_probability < 1e-4

    def test_unrealizable_amplitudes_rejected(self):
        weights = BranchWeights.from_preparation(PhotonKet.normalized([1.0, 0.0, 1.0, 1.0]))
        with pytest.raises(ValidationError):
            failure_density(TransitionAmplitudes(0.9, 1 / 3, -1 / 3), weights, 2.0, 2.0,
                            SMALL_GRID, SMALL_GRID)

    def test_zero_weight_branch_with_amplitude_rejected(self):
        weights = BranchWeights(1.0, 0.0, 0.0)
        with pytest.raises(ValidationError):
            failure_density(TransitionAmplitudes(0.5, 0.5, 0.0), weights, 1.0, 1.0,
                            SMALL_GRID, SMALL_GRID)

    @given(prep=unit_kets(), post=unit_kets(), g_a=couplings, g_b=couplings)
    @settings(max_examples=25)
    def test_partition_and_positivity(self, prep, post, g_a, g_b):
        amps = transition_amplitudes(prep, post)
        weights = BranchWeights.from_preparation(prep)
        branch = failure_density(amps, weights, g_a, g_b, SMALL_GRID, SMALL_GRID)
        p = success_probability(amps, g_a, g_b)
        assert branch.density.min() >= 0.0
        assert abs(branch.total_probability - (1.0 - p)) < 1e-8
