"""
Sensitivity
Analytic partial derivatives of φ and of the coherence bound B(r, p), the points where
they change sign, and central finite differences to check them
"""
import logging
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from config import get_settings
from utils.errors import KinkError, ParameterError, ThresholdUndefinedError
from utils.gini_family import ParamSet, check_p, check_r, phi_formula

logger = logging.getLogger(__name__)


def _pow(base: float, exponent: float) -> float:
    if base > 0.0:
        return base**exponent
    if exponent > 0.0:
        return 0.0
    return 1.0 if exponent == 0.0 else math.inf


def _pow_log(base: float, exponent: float) -> float:
    """base^exponent · ln(base), continued by 0 at base = 0 for exponent > 0"""
    if base > 0.0:
        return base**exponent * math.log(base)
    if exponent > 0.0:
        return 0.0
    return -math.inf


def _on_tail(u: float, params: ParamSet, strict: bool) -> bool:
    if not 0.0 <= u <= 1.0:
        raise ParameterError(f"u must lie in [0, 1], got {u}")
    if u == params.p:
        if strict:
            raise KinkError(f"derivatives of phi are one-sided at the kink u = p = {params.p}")
        logger.debug("one-sided derivative at the kink u = p = %g", params.p)
    return u >= params.p


# raw formulas, no validation, usable for finite differences off the grid


def _du(u: float, p: float, r: float, lam: float) -> float:
    return 2.0 * lam * r * (r - 1.0) * _pow(1.0 - u, r - 2.0) / (1.0 - p) ** 2


def _dlambda(u: float, p: float, r: float) -> float:
    q = 1.0 - p
    return 2.0 * (q ** (r - 1.0) - r * _pow(1.0 - u, r - 1.0)) / q**2


def _dp(u: float, p: float, r: float, lam: float) -> float:
    q = 1.0 - p
    return (1.0 - 2.0 * lam * (r - 3.0) * q ** (r - 2.0) - 4.0 * lam * r * _pow(1.0 - u, r - 1.0) / q) / q**2


def _dr(u: float, p: float, r: float, lam: float) -> float:
    q = 1.0 - p
    bracket = math.log(q) * q ** (r - 1.0) - _pow(1.0 - u, r - 1.0) - r * _pow_log(1.0 - u, r - 1.0)
    return 2.0 * lam * bracket / q**2


def _dudp(u: float, p: float, r: float, lam: float) -> float:
    return 4.0 * lam * r * (r - 1.0) * _pow(1.0 - u, r - 2.0) / (1.0 - p) ** 3


def _dudr(u: float, p: float, r: float, lam: float) -> float:
    w = 1.0 - u
    bracket = (2.0 * r - 1.0) * _pow(w, r - 2.0) + (r * r - r) * _pow_log(w, r - 2.0)
    return 2.0 * lam * bracket / (1.0 - p) ** 2


class Sensitivity:
    """Derivatives of φ in u, λ, p, r and of B(r, p) in p, r"""

    @staticmethod
    def dphi_du(u: float, params: ParamSet, strict: bool = False) -> float:
        """2λr(r-1)(1-u)^(r-2)/(1-p)² on [p, 1]; never negative"""
        if not _on_tail(u, params, strict):
            return 0.0
        return _du(u, params.p, params.r, params.lam)

    @staticmethod
    def dphi_dlambda(u: float, params: ParamSet, strict: bool = False) -> float:
        """2[(1-p)^(r-1) - r(1-u)^(r-1)]/(1-p)²; negative below dphi_dlambda_root"""
        if not _on_tail(u, params, strict):
            return 0.0
        return _dlambda(u, params.p, params.r)

    @staticmethod
    def dphi_dlambda_root(params: ParamSet) -> float:
        """u₀ = 1 - (1-p) r^(-1/(r-1)), with sign(∂φ/∂λ) = sign(u - u₀) on the tail"""
        return 1.0 - (1.0 - params.p) * params.r ** (-1.0 / (params.r - 1.0))

    @staticmethod
    def dphi_dp(u: float, params: ParamSet, strict: bool = False) -> float:
        if not _on_tail(u, params, strict):
            return 0.0
        return _dp(u, params.p, params.r, params.lam)

    @staticmethod
    def dphi_dp_threshold(params: ParamSet) -> float:
        """
        u* = 1 - ((1-p - 2λ(r-3)(1-p)^(r-1)) / (4λr))^(1/(r-1)).

        On (p, 1), sign(∂φ/∂p) = sign(u - u*); a value at or below p means φ increases
        in p over the whole tail.

        Raises:
            ThresholdUndefinedError: λ = 0 (sign +1) or a negative radicand (sign -1)
        """
        p, r, lam = params.p, params.r, params.lam
        q = 1.0 - p
        if lam == 0.0:
            raise ThresholdUndefinedError("with lambda = 0 the p-derivative is 1/(1-p)^2 > 0 everywhere", sign=1)
        radicand = (q - 2.0 * lam * (r - 3.0) * q ** (r - 1.0)) / (4.0 * lam * r)
        if radicand <= 0.0:
            raise ThresholdUndefinedError(
                f"p-derivative is negative on the whole tail (radicand {radicand:g} <= 0)", sign=-1
            )
        return 1.0 - radicand ** (1.0 / (r - 1.0))

    @staticmethod
    def dphi_dr(u: float, params: ParamSet, strict: bool = False) -> float:
        """2λ[ln(1-p)(1-p)^(r-1) - (1-u)^(r-1) - r ln(1-u)(1-u)^(r-1)]/(1-p)², limit taken at u = 1"""
        if not _on_tail(u, params, strict):
            return 0.0
        return _dr(u, params.p, params.r, params.lam)

    @staticmethod
    def dphi_dr_condition(u: float, params: ParamSet) -> bool:
        """
        ∂φ/∂r >= 0 exactly when (1-p)^(r-1) ln(1-p) >= (1-u)^(r-1)[1 + r ln(1-u)].

        Exponentiated this reads (1-p)^((1-p)^(r-1)) >= exp{(1-u)^(r-1)[r ln(1-u) + 1]}.
        """
        if params.lam == 0.0 or u < params.p:
            return True
        r, q, w = params.r, 1.0 - params.p, 1.0 - u
        lhs = q ** (r - 1.0) * math.log(q)
        rhs = _pow(w, r - 1.0) + r * _pow_log(w, r - 1.0)
        return lhs >= rhs

    @staticmethod
    def dB_dp(r: float, p: float) -> float:
        """(r-2)(1-p)^(1-r)/(2(r-1)), the sign of r - 2"""
        check_r(r)
        check_p(p)
        return (r - 2.0) * (1.0 - p) ** (1.0 - r) / (2.0 * (r - 1.0))

    @staticmethod
    def dB_dr(r: float, p: float) -> float:
        """-(1-p)^(2-r)[1 + (r-1)ln(1-p)]/(2(r-1)²), changing sign at r_critical(p)"""
        check_r(r)
        check_p(p)
        q = 1.0 - p
        return -(q ** (2.0 - r)) * (1.0 + (r - 1.0) * math.log(q)) / (2.0 * (r - 1.0) ** 2)

    @staticmethod
    def r_critical(p: float) -> float:
        """r₀ = 1 - 1/ln(1-p) > 1: B decreases in r below r₀ and increases above"""
        check_p(p)
        return 1.0 - 1.0 / math.log(1.0 - p)

    @staticmethod
    def mixed_partials(u: float, params: ParamSet, strict: bool = False) -> Tuple[float, float]:
        """(∂²φ/∂u∂p, ∂²φ/∂u∂r); the first is never negative"""
        if u >= 1.0:
            raise ParameterError("mixed partials are defined for u < 1")
        if not _on_tail(u, params, strict):
            return (0.0, 0.0)
        args = (u, params.p, params.r, params.lam)
        return (_dudp(*args), _dudr(*args))

    @staticmethod
    def mixed_partial_ur_root(r: float) -> float:
        """u where (2r-1) + (r²-r)ln(1-u) = 0; ∂²φ/∂u∂r is positive below it"""
        check_r(r)
        return 1.0 - math.exp(-(2.0 * r - 1.0) / (r * r - r))


def finite_difference(
    f: Callable[[float], float],
    x: float,
    h0: float = 1e-4,
    tol: float = 1e-6,
    floor: float = 1e-9,
    max_step: Optional[float] = None,
) -> float:
    """
    Central difference (f(x+h) - f(x-h))/2h, halving h until two successive
    estimates agree to `tol` (relative, unit floor) or h reaches `floor`
    """
    h = h0 if max_step is None else min(h0, max_step)
    previous = (f(x + h) - f(x - h)) / (2.0 * h)
    while h / 2.0 >= floor:
        h /= 2.0
        current = (f(x + h) - f(x - h)) / (2.0 * h)
        if abs(current - previous) <= tol * max(1.0, abs(current)):
            return current
        previous = current
    return previous


def _residual(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


class SensitivityReport(BaseModel):
    u: float
    params: ParamSet
    kink: bool
    dphi_du: float
    dphi_dlambda: float
    dphi_dp: float
    dphi_dr: float
    d2phi_dudp: float
    d2phi_dudr: float
    fd_residuals: Dict[str, float]
    thresholds: Dict[str, Optional[float]]


def _fd_residuals(u: float, params: ParamSet, report: Dict[str, float]) -> Dict[str, float]:
    p, r, lam = params.p, params.r, params.lam
    room = min(u - p, 1.0 - u) / 4.0
    numeric = {
        "dphi_du": finite_difference(lambda x: phi_formula(x, p, r, lam), u, max_step=room),
        "dphi_dlambda": finite_difference(lambda x: phi_formula(u, p, r, x), lam),
        "dphi_dp": finite_difference(lambda x: phi_formula(u, x, r, lam), p, max_step=(u - p) / 4.0),
        "dphi_dr": finite_difference(lambda x: phi_formula(u, p, x, lam), r, max_step=(r - 1.0) / 4.0),
        "d2phi_dudp": finite_difference(lambda x: _du(u, x, r, lam), p, max_step=(u - p) / 4.0),
        "d2phi_dudr": finite_difference(lambda x: _du(u, p, x, lam), r, max_step=(r - 1.0) / 4.0),
    }
    return {name: _residual(report[name], value) for name, value in numeric.items()}


def _thresholds(params: ParamSet) -> Dict[str, Optional[float]]:
    try:
        u_star: Optional[float] = Sensitivity.dphi_dp_threshold(params)
    except ThresholdUndefinedError:
        u_star = None
    return {
        "dphi_dp_threshold": u_star,
        "dphi_dlambda_root": Sensitivity.dphi_dlambda_root(params),
        "mixed_partial_ur_root": Sensitivity.mixed_partial_ur_root(params.r),
        "r_critical": Sensitivity.r_critical(params.p),
    }


def sensitivity_report(u: float, params: ParamSet, strict: bool = False) -> SensitivityReport:
    """All first and mixed partials at (u, params), checked by finite differences on the open tail"""
    d2_up, d2_ur = Sensitivity.mixed_partials(u, params, strict) if u < 1.0 else (0.0, 0.0)
    values = {
        "dphi_du": Sensitivity.dphi_du(u, params, strict),
        "dphi_dlambda": Sensitivity.dphi_dlambda(u, params, strict),
        "dphi_dp": Sensitivity.dphi_dp(u, params, strict),
        "dphi_dr": Sensitivity.dphi_dr(u, params, strict),
        "d2phi_dudp": d2_up,
        "d2phi_dudr": d2_ur,
    }
    residuals = _fd_residuals(u, params, values) if params.p < u < 1.0 else {}
    return SensitivityReport(
        u=u,
        params=params,
        kink=u == params.p,
        fd_residuals=residuals,
        thresholds=_thresholds(params),
        **values,
    )


class DerivativeCheck(BaseModel):
    """Worst finite-difference residual per derivative and sign-threshold agreement rates"""

    points: int
    max_residuals: Dict[str, float]
    sign_agreement: Dict[str, float]


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def verify_derivatives(
    n_points: int = 1000,
    seed: Optional[int] = None,
    p_range: Tuple[float, float] = (0.8, 0.99),
    r_range: Tuple[float, float] = (1.2, 10.0),
    margin: float = 1e-6,
) -> DerivativeCheck:
    """
    Random interior points (u, p, r, λ) with λ <= lambda_max: finite-difference residuals
    and the fraction of points where each threshold predicts the derivative's sign.
    Points within `margin` of a threshold are not counted for that threshold.
    """
    if n_points < 1:
        raise ParameterError(f"n_points must be >= 1, got {n_points}")
    rng = np.random.default_rng(get_settings().seed if seed is None else seed)
    worst: Dict[str, float] = {}
    hits: Dict[str, int] = {}
    counted: Dict[str, int] = {}

    def tally(name: str, ok: bool) -> None:
        counted[name] = counted.get(name, 0) + 1
        hits[name] = hits.get(name, 0) + int(ok)

    for _ in range(n_points):
        p = rng.uniform(*p_range)
        r = rng.uniform(*r_range)
        params = ParamSet.from_fraction(p, r, rng.uniform(0.0, 1.0))
        u = p + (1.0 - p) * rng.uniform(0.01, 0.99)

        report = sensitivity_report(u, params)
        for name, value in report.fd_residuals.items():
            worst[name] = max(worst.get(name, 0.0), value)

        u_star = report.thresholds["dphi_dp_threshold"]
        if u_star is not None:
            if abs(u - u_star) > margin:
                tally("dphi_dp_threshold", _sign(report.dphi_dp) == _sign(u - u_star))
        else:
            expected = 1 if params.lam == 0.0 else -1
            tally("dphi_dp_threshold", _sign(report.dphi_dp) == expected)

        u0 = report.thresholds["dphi_dlambda_root"]
        if abs(u - u0) > margin:
            tally("dphi_dlambda_root", _sign(report.dphi_dlambda) == _sign(u - u0))

        u_ur = report.thresholds["mixed_partial_ur_root"]
        if params.lam > 0.0 and abs(u - u_ur) > margin:
            tally("mixed_partial_ur_root", _sign(report.d2phi_dudr) == _sign(u_ur - u))

        r0 = report.thresholds["r_critical"]
        if abs(r - r0) > margin:
            tally("r_critical", _sign(Sensitivity.dB_dr(r, p)) == _sign(r - r0))

        if abs(report.dphi_dr) > 1e-12:
            tally("dphi_dr_condition", Sensitivity.dphi_dr_condition(u, params) == (report.dphi_dr >= 0.0))

    agreement = {name: hits[name] / counted[name] for name in counted}
    logger.info("derivative check on %d points: worst residual %.3g", n_points, max(worst.values(), default=0.0))
    return DerivativeCheck(points=n_points, max_residuals=worst, sign_agreement=agreement)


dphi_du = Sensitivity.dphi_du
dphi_dlambda = Sensitivity.dphi_dlambda
dphi_dlambda_root = Sensitivity.dphi_dlambda_root
dphi_dp = Sensitivity.dphi_dp
dphi_dp_threshold = Sensitivity.dphi_dp_threshold
dphi_dr = Sensitivity.dphi_dr
dphi_dr_condition = Sensitivity.dphi_dr_condition
dB_dp = Sensitivity.dB_dp
dB_dr = Sensitivity.dB_dr
r_critical = Sensitivity.r_critical
mixed_partials = Sensitivity.mixed_partials
mixed_partial_ur_root = Sensitivity.mixed_partial_ur_root
