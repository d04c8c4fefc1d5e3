import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from utils.closed_forms import LocationScale, SphericalSpec
from utils.distributions import normal, synthetic_sample
from utils.errors import DataError, ParameterError
from utils.estimator import (
    CACHE_MAX_N,
    EmpiricalEstimator,
    EmpiricalSample,
    SignConvention,
    _cached_weights,
    estimator_weights,
    tail_start,
)
from utils.gini_family import GiniFamily, ParamSet

losses_strategy = arrays(
    dtype=np.float64,
    shape=st.integers(20, 200),
    elements=st.floats(min_value=-100.0, max_value=100.0, allow_nan=False, allow_infinity=False),
)


class TestEmpiricalSample:
    def test_sorted_copy(self):
        raw = np.array([3.0, 1.0, 2.0])
        sample = EmpiricalSample.from_losses(raw)
        assert sample.losses.tolist() == [1.0, 2.0, 3.0]
        assert not sample.losses.flags.writeable
        assert raw.flags.writeable

    def test_returns_are_negated(self):
        sample = EmpiricalSample.from_returns([0.01, -0.02])
        assert sample.losses.tolist() == [-0.01, 0.02]
        assert sample.sign_convention == SignConvention.RETURNS_NEGATED

    @pytest.mark.parametrize("values", [[], [1.0, np.nan], [np.inf]])
    def test_rejects_unusable_data(self, values):
        with pytest.raises(DataError):
            EmpiricalSample.from_losses(values)

    def test_rejects_unsorted_losses(self):
        with pytest.raises(DataError):
            EmpiricalSample(losses=np.array([2.0, 1.0]))


class TestWeights:
    def test_tail_start(self):
        assert tail_start(100, 0.95) == 95
        assert tail_start(10, 0.3) == 3
        assert tail_start(3, 0.1) == 1

    def test_normalised_and_zero_below_tail(self):
        params = ParamSet.from_fraction(0.9, 3.0, 0.5)
        w = estimator_weights(200, params).weights
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w[: tail_start(200, 0.9) - 1] == 0.0)
        assert np.all(w >= 0)
        assert np.all(np.diff(w[tail_start(200, 0.9) - 1 :]) >= 0)

    def test_grid_point_at_p_is_kept(self):
        params = ParamSet(p=0.5, r=2.0, lam=0.0)
        w = estimator_weights(4, params).weights
        assert w.tolist() == pytest.approx([0.0, 1 / 3, 1 / 3, 1 / 3])

    def test_weights_are_cached_and_read_only(self):
        params = ParamSet(p=0.9, r=2.0, lam=0.1)
        assert estimator_weights(50, params) is estimator_weights(50, params)
        assert not estimator_weights(50, params).weights.flags.writeable

    @given(n=st.integers(1, 500), fraction=st.floats(0.0, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_small_sizes_share_one_array(self, n, fraction):
        params = ParamSet.from_fraction(0.9, 3.0, fraction)
        assert estimator_weights(n, params) is estimator_weights(n, params)

    def test_large_sizes_are_not_kept(self):
        params = ParamSet(p=0.95, r=2.0, lam=0.25)
        n = CACHE_MAX_N + 1
        first, second = estimator_weights(n, params), estimator_weights(n, params)
        assert first is not second
        np.testing.assert_array_equal(first.weights, second.weights)
        assert not first.weights.flags.writeable

    def test_cache_is_bounded(self):
        for n in range(1, 200):
            estimator_weights(n, ParamSet(p=0.5))
        info = _cached_weights.cache_info()
        assert info.currsize <= info.maxsize

    def test_incoherent_weights_go_negative(self):
        params = ParamSet.from_fraction(0.9, 2.0, 1.5)
        w = estimator_weights(100, params).weights
        assert w[tail_start(100, 0.9) - 1] < 0

    def test_invalid_size(self):
        with pytest.raises(ParameterError):
            estimator_weights(0, ParamSet(p=0.9))


class TestEstimators:
    def test_four_point_example(self):
        sample = EmpiricalSample.from_losses([1.0, 2.0, 3.0, 4.0])
        assert EmpiricalEstimator.egs_hat(sample, ParamSet(p=0.5, r=2.0, lam=0.0)) == pytest.approx(3.0)

    def test_var_and_es(self):
        sample = EmpiricalSample.from_losses(np.arange(1.0, 101.0))
        assert EmpiricalEstimator.var_hat(sample, 0.95) == 95.0
        assert EmpiricalEstimator.es_hat(sample, 0.95) == pytest.approx(97.5)

    def test_egini_hat_r2_is_gini_mean_difference(self, rng):
        values = rng.standard_t(4, size=300)
        sample = EmpiricalSample.from_losses(values)
        assert EmpiricalEstimator.egini_hat(sample, 2.0) == pytest.approx(
            EmpiricalEstimator.gini_mean_difference(values), rel=1e-9
        )

    @given(values=arrays(np.float64, st.integers(1, 40), elements=st.floats(-50.0, 50.0)))
    @settings(max_examples=30, deadline=None)
    def test_gini_mean_difference_matches_all_pairs(self, values):
        brute = np.abs(values[:, None] - values[None, :]).mean()
        assert EmpiricalEstimator.gini_mean_difference(values) == pytest.approx(brute, abs=1e-9)

    def test_gini_mean_difference_empty(self):
        with pytest.raises(DataError):
            EmpiricalEstimator.gini_mean_difference([])

    def test_exact_egs_decomposes(self, rng, midpoint_params):
        sample = EmpiricalSample.from_losses(rng.normal(size=400))
        es_part = EmpiricalEstimator.choquet_hat(sample, GiniFamily.es_distortion(midpoint_params.p))
        teg_part = EmpiricalEstimator.teg_hat(sample, midpoint_params.r, midpoint_params.p)
        assert EmpiricalEstimator.egs_exact_hat(sample, midpoint_params) == pytest.approx(
            es_part + midpoint_params.lam * teg_part, abs=1e-12
        )

    @given(values=losses_strategy, fraction=st.floats(0.0, 2.0))
    @settings(max_examples=50, deadline=None)
    def test_egs_dominates_es(self, values, fraction):
        sample = EmpiricalSample.from_losses(values)
        params = ParamSet.from_fraction(0.9, 3.0, fraction)
        gap = EmpiricalEstimator.es_hat(sample, 0.9) - EmpiricalEstimator.egs_hat(sample, params)
        assert gap <= 1e-9 * max(1.0, np.max(np.abs(values)))

    @given(values=losses_strategy, m=st.floats(-10.0, 10.0), c=st.floats(0.1, 10.0))
    @settings(max_examples=50, deadline=None)
    def test_translation_and_homogeneity(self, values, m, c):
        params = ParamSet.from_fraction(0.95, 2.0, 0.5)
        base = EmpiricalEstimator.egs_hat(EmpiricalSample.from_losses(values), params)
        moved = EmpiricalEstimator.egs_hat(EmpiricalSample.from_losses(values + m), params)
        scaled = EmpiricalEstimator.egs_hat(EmpiricalSample.from_losses(c * values), params)
        assert moved == pytest.approx(base + m, abs=1e-9)
        assert scaled == pytest.approx(c * base, abs=1e-9 * c)


class TestConsistency:
    SEED = 20240601

    @staticmethod
    def relative_error(n: int, params: ParamSet) -> float:
        sample = EmpiricalSample.from_losses(synthetic_sample(normal(), n, seed=TestConsistency.SEED))
        analytic = LocationScale(SphericalSpec.normal()).egs(params)
        return abs(EmpiricalEstimator.egs_hat(sample, params) - analytic) / analytic

    @pytest.mark.parametrize("r", [2.0, 3.0])
    def test_large_normal_sample_matches_closed_form(self, r):
        assert self.relative_error(100_000, ParamSet.from_fraction(0.95, r, 0.5)) < 0.02

    def test_error_shrinks_with_sample_size(self, midpoint_params):
        errors = [self.relative_error(n, midpoint_params) for n in (1_000, 10_000, 100_000)]
        assert errors == sorted(errors, reverse=True)
        assert errors[0] > errors[-1]

    def test_approaches_es_as_r_grows(self, normal_sample):
        es = EmpiricalEstimator.es_hat(normal_sample, 0.95)
        low_r = EmpiricalEstimator.egs_hat(normal_sample, ParamSet.from_fraction(0.95, 2.0, 0.5))
        high_r = EmpiricalEstimator.egs_hat(normal_sample, ParamSet.from_fraction(0.95, 30.0, 0.5))
        assert abs(high_r - es) < abs(low_r - es)

    def test_quantile_model_of_sample(self):
        sample = EmpiricalSample.from_losses([4.0, 1.0, 3.0, 2.0])
        q = sample.quantile_model()
        assert q(0.25) == 1.0
        assert q(0.26) == 2.0
        assert q(1.0) == 4.0
