"""
Measure Service
Computes one measure for a named distribution, a quantile model or a loss sample,
choosing the closed form when one exists, quadrature otherwise, the estimator for samples
"""
import logging
import warnings
from typing import Optional, Union

from config import get_settings
from utils.choquet import QuantileModel
from utils.closed_forms import ClosedForms, LocationScale, SphericalSpec
from utils.errors import IncoherentLoadingWarning, ParameterError
from utils.estimator import EmpiricalEstimator, EmpiricalSample
from utils.gini_family import GiniFamily, MeasureId, MeasureValue, Method, ParamSet, check_r

logger = logging.getLogger(__name__)

Source = Union[str, QuantileModel, EmpiricalSample]

DISTRIBUTIONS = ("uniform01", "uniform", "normal", "student_t")


def elliptical_law(name: str, dof: float = 5.0, loc: float = 0.0, scale: float = 1.0) -> LocationScale:
    """Named law as alpha + beta·Z; uniform01 is 1/2 + Z/2 with Z ~ U[-1, 1]"""
    if name == "uniform01":
        return LocationScale(SphericalSpec.uniform(), alpha=loc + 0.5 * scale, beta=0.5 * scale)
    if name == "uniform":
        return LocationScale(SphericalSpec.uniform(), alpha=loc, beta=scale)
    if name == "normal":
        return LocationScale(SphericalSpec.normal(), alpha=loc, beta=scale)
    if name == "student_t":
        return LocationScale(SphericalSpec.student_t_dof(dof), alpha=loc, beta=scale)
    raise ParameterError(f"unknown distribution '{name}', expected one of {list(DISTRIBUTIONS)}")


class MeasureService:
    """Dispatches a measure request to the closed forms, the quadrature engine or the estimator"""

    @staticmethod
    def compute_single(
        source: Source,
        measure_id: MeasureId,
        params: Optional[ParamSet] = None,
        dof: float = 5.0,
        loc: float = 0.0,
        scale: float = 1.0,
        tol: Optional[float] = None,
        r: Optional[float] = None,
    ) -> MeasureValue:
        """
        Args:
            source: distribution name, quantile model or empirical sample
            measure_id: which measure
            params: (p, r, λ); Gini needs none
            r: risk aversion for EGini when no params are given; EGini has no prudence level

        Returns:
            MeasureValue with the method used; an incoherent λ is computed anyway and
            reported through `coherent` and `warnings`
        """
        measure_id = MeasureId(measure_id)
        aversion = MeasureService._aversion(measure_id, params, r)
        if params is None and aversion is None:
            raise ParameterError(f"{measure_id.value} needs p (and r, lambda where relevant)")

        notes = []
        coherent = True
        if measure_id == MeasureId.EGS and not params.coherent:
            coherent = False
            notes.append(
                f"lambda={params.lam:g} exceeds lambda_max={params.lambda_max:g}; EGS is not coherent"
            )

        with warnings.catch_warnings():
            # reported once through `notes`
            warnings.simplefilter("ignore", IncoherentLoadingWarning)
            if isinstance(source, EmpiricalSample):
                value = MeasureService._empirical(source, measure_id, params, aversion)
                method, name = Method.EMPIRICAL, source.source
            elif isinstance(source, QuantileModel):
                value = MeasureService._quadrature(source, measure_id, params, aversion, tol)
                method, name = Method.QUADRATURE, source.name
            else:
                value, method = MeasureService._analytic(source, measure_id, params, aversion, dof, loc, scale, tol)
                name = source

        if not coherent:
            logger.warning("%s for %s: %s", measure_id.value, name, notes[0])
        return MeasureValue(
            value=value,
            measure_id=measure_id,
            params=params,
            r=aversion,
            method=method,
            coherent=coherent,
            distribution=name,
            warnings=notes,
        )

    @staticmethod
    def _aversion(measure_id: MeasureId, params: Optional[ParamSet], r: Optional[float]) -> Optional[float]:
        """r used by Gini (always 2) and EGini (params.r, else the bare r); None for the tail measures"""
        if measure_id == MeasureId.GINI:
            return 2.0
        if measure_id != MeasureId.EGINI:
            return None
        if params is not None:
            if r is not None and r != params.r:
                raise ParameterError(f"r={r:g} disagrees with params.r={params.r:g}")
            return params.r
        if r is None:
            return None
        check_r(r)
        return float(r)

    @staticmethod
    def _empirical(
        sample: EmpiricalSample, measure_id: MeasureId, params: Optional[ParamSet], r: Optional[float]
    ) -> float:
        if measure_id == MeasureId.VAR:
            return EmpiricalEstimator.var_hat(sample, params.p)
        if measure_id == MeasureId.ES:
            return EmpiricalEstimator.es_hat(sample, params.p)
        if measure_id == MeasureId.GINI:
            return EmpiricalEstimator.gini_mean_difference(sample.losses)
        if measure_id == MeasureId.EGINI:
            return EmpiricalEstimator.egini_hat(sample, r)
        if measure_id == MeasureId.TEG:
            return EmpiricalEstimator.teg_hat(sample, params.r, params.p)
        return EmpiricalEstimator.egs_hat(sample, params)

    @staticmethod
    def _quadrature(
        q: QuantileModel,
        measure_id: MeasureId,
        params: Optional[ParamSet],
        r: Optional[float],
        tol: Optional[float],
    ) -> float:
        if measure_id == MeasureId.VAR:
            return GiniFamily.var(q, params.p)
        if measure_id == MeasureId.ES:
            return GiniFamily.es(q, params.p, tol)
        if measure_id == MeasureId.GINI:
            return GiniFamily.gini(q, tol)
        if measure_id == MeasureId.EGINI:
            return GiniFamily.egini(q, r, tol)
        if measure_id == MeasureId.TEG:
            return GiniFamily.teg(q, params.r, params.p, tol)
        return GiniFamily.egs(q, params, tol)

    @staticmethod
    def _analytic(name, measure_id, params, r, dof, loc, scale, tol):
        law = elliptical_law(name, dof, loc, scale)
        base = law.base
        if measure_id == MeasureId.VAR:
            return law.alpha + law.beta * base.quantile(params.p), Method.ANALYTIC
        if measure_id == MeasureId.ES:
            return law.es(params.p), Method.ANALYTIC
        if measure_id in (MeasureId.GINI, MeasureId.EGINI):
            return law.beta * MeasureService._spherical_egini(base, r, tol), Method.ANALYTIC
        teg, method = MeasureService._spherical_teg(law, params, tol)
        if measure_id == MeasureId.TEG:
            return teg, method
        return law.es(params.p) + params.lam * teg, method

    @staticmethod
    def _spherical_egini(base: SphericalSpec, r: float, tol: Optional[float]) -> float:
        if base.name == "uniform":
            return ClosedForms.egini_uniform(r)
        if base.name == "normal" and r == 2.0:
            return ClosedForms.gini_normal()
        return ClosedForms.egini_elliptical(base, r, tol)

    @staticmethod
    def _spherical_teg(law: LocationScale, params: ParamSet, tol: Optional[float]):
        base, r, p = law.base, params.r, params.p
        if base.name == "uniform":
            return law.beta * ClosedForms.teg_uniform(r, p), Method.ANALYTIC
        if base.theta is not None:
            if base.theta > 1.5 or base.theta <= 1.0:
                return law.beta * ClosedForms.teg_student_t(base.theta, r, p, tol), Method.ANALYTIC
            # finite mean but no f_(theta-1): integrate the quantile instead
            return GiniFamily.teg(law.quantile_model(), r, p, tol), Method.QUADRATURE
        return law.beta * ClosedForms.teg_elliptical(base, r, p, tol), Method.ANALYTIC


compute_single = MeasureService.compute_single


def resolve_params(p: float, r: float = 2.0, lam: Optional[float] = None, lam_frac: Optional[float] = None) -> ParamSet:
    """
    ParamSet from either an absolute λ or a fraction of lambda_max, never both.
    With neither, the configured default fraction applies.
    """
    if lam is not None and lam_frac is not None:
        raise ParameterError("give either lambda or lambda_frac, not both")
    if lam is not None:
        return ParamSet(p=p, r=r, lam=lam)
    fraction = get_settings().lambda_fraction if lam_frac is None else lam_frac
    return ParamSet.from_fraction(p, r, fraction)
