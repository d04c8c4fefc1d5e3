import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils import choquet
from utils.choquet import ChoquetEngine, DistortionFunction, QuantileModel, WeightFunction
from utils.distributions import normal, standard_uniform, uniform01
from utils.errors import DomainError, ParameterError, QuadratureError
from utils.gini_family import GiniFamily, ParamSet


class TestChoquetIntegral:
    def test_unit_weight_gives_mean(self):
        w = WeightFunction(eval=lambda u: 1.0)
        assert ChoquetEngine.choquet_integral(uniform01(), w) == pytest.approx(0.5, abs=1e-10)

    def test_gini_weight_on_uniform(self):
        assert ChoquetEngine.choquet_integral(uniform01(), GiniFamily.gini_weight()) == pytest.approx(1 / 3, abs=1e-10)

    def test_es_weight_on_normal_tail(self):
        value = ChoquetEngine.choquet_integral(normal(), GiniFamily.es_weight(0.975))
        assert value == pytest.approx(2.3378, abs=1e-4)

    def test_symmetric_weight_on_normal_is_zero(self):
        # both tails substituted; the two halves cancel
        w = WeightFunction(eval=lambda u: 1.0)
        assert ChoquetEngine.choquet_integral(normal(), w) == pytest.approx(0.0, abs=1e-8)

    def test_half_gini_from_h2(self):
        assert ChoquetEngine.choquet_from_distortion(uniform01(), GiniFamily.h_r_distortion(2.0)) == pytest.approx(
            1 / 6, abs=1e-10
        )

    def test_gini_from_doubled_h2(self):
        value = ChoquetEngine.choquet_from_distortion(uniform01(), GiniFamily.extended_gini_distortion(2.0))
        assert value == pytest.approx(1 / 3, abs=1e-10)

    def test_teg_distortion_agrees_with_teg_weight(self):
        from_distortion = ChoquetEngine.choquet_from_distortion(normal(), GiniFamily.teg_distortion(3.0, 0.9))
        assert from_distortion == pytest.approx(GiniFamily.teg(normal(), 3.0, 0.9), rel=1e-6)

    def test_rejects_non_positive_tol(self):
        with pytest.raises(ParameterError):
            ChoquetEngine.choquet_integral(uniform01(), GiniFamily.gini_weight(), tol=0.0)

    def test_nan_quantile_raises_domain_error(self):
        broken = QuantileModel(eval=lambda u: math.nan, name="broken")
        with pytest.raises(DomainError) as excinfo:
            ChoquetEngine.choquet_integral(broken, GiniFamily.gini_weight())
        assert excinfo.value.u is not None

    def test_non_convergence_reports_estimate(self, monkeypatch):
        def stalled(*args, **kwargs):
            return 0.5, 1.0, {"neval": 21}, "the maximum number of subdivisions has been achieved"

        monkeypatch.setattr(choquet.integrate, "quad", stalled)
        with pytest.raises(QuadratureError) as excinfo:
            ChoquetEngine.choquet_integral(uniform01(), WeightFunction(eval=lambda u: 1.0))
        assert excinfo.value.estimate == pytest.approx(0.5)
        assert excinfo.value.error_bound == pytest.approx(1.0)


class TestWeightAndDistortion:
    def test_total_mass(self):
        assert GiniFamily.es_weight(0.9).total_mass == pytest.approx(1.0, abs=1e-10)
        assert GiniFamily.gini_weight().total_mass == pytest.approx(0.0, abs=1e-10)
        assert GiniFamily.phi_weight(ParamSet.from_fraction(0.95, 3.0, 0.5)).total_mass == pytest.approx(1.0, abs=1e-8)

    def test_support_outside_unit_interval(self):
        with pytest.raises(ParameterError):
            WeightFunction(eval=lambda u: 1.0, support=(0.5, 1.5))

    def test_weight_vanishes_off_support(self):
        w = GiniFamily.es_weight(0.9)
        assert w(0.5) == 0.0
        assert w(0.95) == pytest.approx(10.0)

    def test_distortion_must_start_at_zero(self):
        with pytest.raises(ParameterError):
            DistortionFunction(eval=lambda u: u + 1.0, derivative=lambda u: 1.0)

    def test_variability_distortion_must_end_at_zero(self):
        with pytest.raises(ParameterError):
            DistortionFunction(eval=lambda u: u, derivative=lambda u: 1.0, variability=True)

    def test_cell_weights(self):
        assert DistortionFunction.identity().cell_weights(4).tolist() == pytest.approx([0.25] * 4)
        assert GiniFamily.h_r_distortion(3.0).cell_weights(50).sum() == pytest.approx(0.0, abs=1e-14)
        assert GiniFamily.egs_distortion(ParamSet(p=0.9, r=2.0, lam=0.2)).cell_weights(40).sum() == pytest.approx(1.0)
        with pytest.raises(ParameterError):
            DistortionFunction.identity().cell_weights(0)

    def test_kinks_become_breakpoints(self):
        w = GiniFamily.es_distortion(0.9).weight_function()
        assert w.breakpoints == (0.9,)


class TestQuantileModel:
    def test_monotone_spot_check(self):
        assert normal().is_monotone()
        assert not QuantileModel(eval=lambda u: -u).is_monotone()

    def test_scale_must_be_positive(self):
        with pytest.raises(ParameterError):
            normal().scale(-1.0)

    def test_tail_uses_upper_tail_function(self):
        assert normal().tail(1e-10) == pytest.approx(6.3613, abs=1e-3)
        assert uniform01().tail(0.25) == pytest.approx(0.75)

    @given(m=st.floats(-5.0, 5.0), c=st.floats(0.2, 5.0))
    @settings(max_examples=15, deadline=None)
    def test_translation_and_scaling(self, m, c):
        params = ParamSet.from_fraction(0.95, 3.0, 0.5)
        base = GiniFamily.egs(normal(), params)
        assert GiniFamily.egs(normal().shift(m), params) == pytest.approx(base + m, abs=1e-6)
        assert GiniFamily.egs(normal().scale(c), params) == pytest.approx(c * base, rel=1e-6)
        assert GiniFamily.teg(normal().shift(m), 3.0, 0.95) == pytest.approx(GiniFamily.teg(normal(), 3.0, 0.95), rel=1e-6)

    def test_comonotone_additivity(self):
        params = ParamSet.from_fraction(0.9, 2.0, 0.5)
        x, y = normal(), standard_uniform()
        combined = GiniFamily.egs(x.comonotone_sum(y), params)
        assert combined == pytest.approx(GiniFamily.egs(x, params) + GiniFamily.egs(y, params), abs=1e-6)
