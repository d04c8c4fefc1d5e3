"""
Gini Family
VaR, ES, Gini, Extended Gini, Tail Extended Gini and Extended Gini Shortfall (EGS)
as signed Choquet integrals, plus the EGS weighting function φ and its coherence bound
"""
import logging
import math
import warnings
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from utils.choquet import ChoquetEngine, DistortionFunction, QuantileModel, WeightFunction
from utils.errors import IncoherentLoadingWarning, ParameterError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


class MeasureId(str, Enum):
    VAR = "VaR"
    ES = "ES"
    GINI = "Gini"
    EGINI = "EGini"
    TEG = "TEG"
    EGS = "EGS"


class Method(str, Enum):
    ANALYTIC = "analytic"
    QUADRATURE = "quadrature"
    EMPIRICAL = "empirical"


def check_p(p: float, allow_zero: bool = False) -> None:
    lower_ok = p >= 0.0 if allow_zero else p > 0.0
    if not (isinstance(p, (int, float)) and lower_ok and p < 1.0):
        interval = "[0, 1)" if allow_zero else "(0, 1)"
        raise ParameterError(f"p must lie in {interval}, got {p}")


def check_r(r: float) -> None:
    if not (isinstance(r, (int, float)) and math.isfinite(r)):
        raise ParameterError(f"r must be a finite real > 1, got {r}")
    if r <= 1.0:
        raise ParameterError(
            f"r must be > 1, got {r}; r = 1 is the risk-neutral limit where the Extended Gini vanishes"
        )


def lambda_max(r: float, p: float) -> float:
    """Coherence bound B(r, p) = 1 / (2(r-1)(1-p)^(r-2)) on the loading λ"""
    check_r(r)
    check_p(p)
    return 1.0 / (2.0 * (r - 1.0) * (1.0 - p) ** (r - 2.0))


class ParamSet(BaseModel):
    """The (p, r, λ) triple: prudence level, risk aversion and loading"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    p: float
    r: float = 2.0
    lam: float = Field(0.0, alias="lambda")

    @model_validator(mode="after")
    def _check_domain(self) -> "ParamSet":
        check_p(self.p)
        check_r(self.r)
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ParameterError(f"lambda must be a finite real >= 0, got {self.lam}")
        return self

    @classmethod
    def from_fraction(cls, p: float, r: float, fraction: float) -> "ParamSet":
        """λ = fraction · lambda_max(r, p); fraction 0.5 is the midpoint rule"""
        if not (math.isfinite(fraction) and fraction >= 0.0):
            raise ParameterError(f"lambda fraction must be >= 0, got {fraction}")
        return cls(p=p, r=r, lam=fraction * lambda_max(r, p))

    @property
    def lambda_max(self) -> float:
        return lambda_max(self.r, self.p)

    @property
    def coherent(self) -> bool:
        return self.lam <= self.lambda_max

    @property
    def lambda_fraction(self) -> float:
        return self.lam / self.lambda_max


class MeasureValue(BaseModel):
    value: float
    measure_id: MeasureId
    params: Optional[ParamSet] = None
    r: Optional[float] = None
    method: Method
    coherent: bool = True
    distribution: str = ""
    warnings: List[str] = []

    @model_validator(mode="after")
    def _variability_non_negative(self) -> "MeasureValue":
        variability = self.measure_id in (MeasureId.GINI, MeasureId.EGINI, MeasureId.TEG)
        if variability and self.method != Method.EMPIRICAL and self.value < 0:
            raise ParameterError(f"{self.measure_id.value} must be non-negative, got {self.value}")
        return self


def _unit_interval(u: ArrayLike) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise ParameterError(f"u must lie in [0, 1], got {u}")
    return arr


def _scalar_or_array(arr: np.ndarray) -> Union[float, np.ndarray]:
    return float(arr) if arr.ndim == 0 else arr


def g_r(u: ArrayLike, r: float) -> Union[float, np.ndarray]:
    """g_r(u) = -r(1-u)^(r-1); non-decreasing with g_r(1) = 0"""
    check_r(r)
    arr = _unit_interval(u)
    return _scalar_or_array(-r * (1.0 - arr) ** (r - 1.0))


def h_r(u: ArrayLike, r: float) -> Union[float, np.ndarray]:
    """h_r(u) = u + (1-u)^r - 1; convex with h_r(0) = h_r(1) = 0"""
    check_r(r)
    arr = _unit_interval(u)
    return _scalar_or_array(arr + (1.0 - arr) ** r - 1.0)


def phi_formula(u: ArrayLike, p: float, r: float, lam: float) -> Union[float, np.ndarray]:
    """
    φ without parameter validation, for finite differences that step outside the domain.

    Written as [(1-p)(1 - λ/B) + 2λr((1-p)^(r-1) - (1-u)^(r-1))] / (1-p)^2, which is the
    textbook form rearranged so that φ(p) is exactly zero when λ = B(r, p).
    """
    arr = np.asarray(u, dtype=float)
    q = 1.0 - p
    bound = 1.0 / (2.0 * (r - 1.0) * q ** (r - 2.0))
    body = (q * (1.0 - lam / bound) + 2.0 * lam * r * (q ** (r - 1.0) - (1.0 - arr) ** (r - 1.0))) / q**2
    out = np.where((arr >= p) & (arr <= 1.0), body, 0.0)
    return _scalar_or_array(out)


def phi(u: ArrayLike, params: ParamSet) -> Union[float, np.ndarray]:
    """EGS weighting function, zero below p, integrates to 1 over [0, 1]"""
    return phi_formula(u, params.p, params.r, params.lam)


class GiniFamily:
    """Weight functions, distortions and measures of the family"""

    # weights

    @staticmethod
    def es_weight(p: float) -> WeightFunction:
        check_p(p)
        return WeightFunction(eval=lambda u: 1.0 / (1.0 - p), support=(p, 1.0), name=f"es[{p:g}]")

    @staticmethod
    def gini_weight() -> WeightFunction:
        return WeightFunction(eval=lambda u: 2.0 * (2.0 * u - 1.0), name="gini")

    @staticmethod
    def egini_weight(r: float) -> WeightFunction:
        check_r(r)
        return WeightFunction(eval=lambda u: 2.0 * (1.0 - r * (1.0 - u) ** (r - 1.0)), name=f"egini[{r:g}]")

    @staticmethod
    def teg_weight(r: float, p: float) -> WeightFunction:
        check_r(r)
        check_p(p, allow_zero=True)
        q = 1.0 - p
        return WeightFunction(
            eval=lambda u: 2.0 * (q ** (r - 1.0) - r * (1.0 - u) ** (r - 1.0)) / q**2,
            support=(p, 1.0),
            name=f"teg[{r:g},{p:g}]",
        )

    @staticmethod
    def phi_weight(params: ParamSet) -> WeightFunction:
        p, r, lam = params.p, params.r, params.lam
        return WeightFunction(
            eval=lambda u: phi_formula(u, p, r, lam),
            support=(p, 1.0),
            name=f"phi[{p:g},{r:g},{lam:g}]",
        )

    # distortions

    @staticmethod
    def h_r_distortion(r: float) -> DistortionFunction:
        check_r(r)
        return DistortionFunction(
            eval=lambda u: u + (1.0 - u) ** r - 1.0,
            derivative=lambda u: 1.0 - r * (1.0 - u) ** (r - 1.0),
            variability=True,
            name=f"h[{r:g}]",
        )

    @staticmethod
    def extended_gini_distortion(r: float) -> DistortionFunction:
        """2·h_r, whose Choquet integral is EGini_r (∫F⁻¹ dh_r alone gives half of it)"""
        check_r(r)
        return DistortionFunction(
            eval=lambda u: 2.0 * (u + (1.0 - u) ** r - 1.0),
            derivative=lambda u: 2.0 * (1.0 - r * (1.0 - u) ** (r - 1.0)),
            variability=True,
            name=f"egini[{r:g}]",
        )

    @staticmethod
    def teg_distortion(r: float, p: float) -> DistortionFunction:
        """2[(1-p)^(r-1)(u-p) + (1-u)^r - (1-p)^r]/(1-p)² above p; vanishes at both ends"""
        check_r(r)
        check_p(p, allow_zero=True)
        q = 1.0 - p
        weight = GiniFamily.teg_weight(r, p)
        return DistortionFunction(
            eval=lambda u: 2.0 * (q ** (r - 1.0) * (u - p) + (1.0 - u) ** r - q**r) / q**2 if u > p else 0.0,
            derivative=weight,
            kinks=(p,) if p > 0.0 else (),
            variability=True,
            name=f"teg[{r:g},{p:g}]",
        )

    @staticmethod
    def es_distortion(p: float) -> DistortionFunction:
        check_p(p)
        return DistortionFunction(
            eval=lambda u: max(u - p, 0.0) / (1.0 - p),
            derivative=lambda u: 1.0 / (1.0 - p) if u >= p else 0.0,
            kinks=(p,),
            name=f"es[{p:g}]",
        )

    @staticmethod
    def egs_distortion(params: ParamSet) -> DistortionFunction:
        """H(u) = ∫₀ᵘ φ, with a kink at p"""
        p, r, lam = params.p, params.r, params.lam
        q = 1.0 - p
        flat = q * (1.0 - lam / params.lambda_max)

        def integral(u: float) -> float:
            if u <= p:
                return 0.0
            tail = q ** (r - 1.0) * (u - p) + ((1.0 - u) ** r - q**r) / r
            return (flat * (u - p) + 2.0 * lam * r * tail) / q**2

        return DistortionFunction(
            eval=integral,
            derivative=lambda u: phi_formula(u, p, r, lam),
            kinks=(p,),
            name=f"egs[{p:g},{r:g},{lam:g}]",
        )

    # measures

    @staticmethod
    def var(q: QuantileModel, p: float) -> float:
        """F⁻¹(p) under the left-continuous inverse"""
        check_p(p)
        return q(p)

    @staticmethod
    def es(q: QuantileModel, p: float, tol: Optional[float] = None) -> float:
        return ChoquetEngine.choquet_integral(q, GiniFamily.es_weight(p), tol)

    @staticmethod
    def gini(q: QuantileModel, tol: Optional[float] = None) -> float:
        return _non_negative(ChoquetEngine.choquet_integral(q, GiniFamily.gini_weight(), tol))

    @staticmethod
    def egini(q: QuantileModel, r: float, tol: Optional[float] = None) -> float:
        return _non_negative(ChoquetEngine.choquet_integral(q, GiniFamily.egini_weight(r), tol))

    @staticmethod
    def teg(q: QuantileModel, r: float, p: float, tol: Optional[float] = None) -> float:
        return _non_negative(ChoquetEngine.choquet_integral(q, GiniFamily.teg_weight(r, p), tol))

    @staticmethod
    def egs(q: QuantileModel, params: ParamSet, tol: Optional[float] = None, path: str = "choquet") -> float:
        """
        EGS = ES_p + λ·TEG_{r,p}

        Args:
            path: "choquet" integrates F⁻¹ against φ once; "decomposed" adds the two parts

        Returns:
            The EGS value. λ above lambda_max is computed anyway with an
            IncoherentLoadingWarning.
        """
        if not params.coherent:
            warn_incoherent(params)
        if path == "choquet":
            return ChoquetEngine.choquet_integral(q, GiniFamily.phi_weight(params), tol)
        if path == "decomposed":
            return GiniFamily.es(q, params.p, tol) + params.lam * GiniFamily.teg(q, params.r, params.p, tol)
        raise ParameterError(f"unknown EGS evaluation path '{path}', expected 'choquet' or 'decomposed'")

    @staticmethod
    def egini_covariance(values: Sequence[float], r: float) -> float:
        """
        -2r·Cov[X, (1-F(X))^(r-1)] with F(X) replaced by mid-ranks (rank - 1/2)/n.

        Only meaningful for samples of a continuous law; ties make F(X) non-uniform.
        """
        check_r(r)
        x = np.asarray(values, dtype=float)
        if x.size < 2:
            raise ParameterError("covariance form needs at least two observations")
        u = (stats.rankdata(x, method="average") - 0.5) / x.size
        return float(-2.0 * r * np.cov(x, (1.0 - u) ** (r - 1.0), bias=True)[0, 1])


def warn_incoherent(params: ParamSet) -> None:
    message = (
        f"lambda={params.lam:g} exceeds lambda_max={params.lambda_max:g} for r={params.r:g}, p={params.p:g}; "
        "EGS is not coherent"
    )
    logger.warning(message)
    warnings.warn(message, IncoherentLoadingWarning, stacklevel=3)


def _non_negative(value: float) -> float:
    # quadrature noise around an exact zero (constants, symmetric cancellations)
    return 0.0 if -1e-8 < value < 0.0 else value


var = GiniFamily.var
es = GiniFamily.es
gini = GiniFamily.gini
egini = GiniFamily.egini
teg = GiniFamily.teg
egs = GiniFamily.egs
egini_covariance = GiniFamily.egini_covariance
