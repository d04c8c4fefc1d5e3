"""
Empirical Estimator
Sorted losses weighted by normalised spectral weights: EGS_hat = Σ X_(i) φ(i/N) / Σ φ(k/N)
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from utils.choquet import DistortionFunction, QuantileModel
from utils.distributions import empirical
from utils.errors import DataError, ParameterError
from utils.gini_family import GiniFamily, ParamSet, check_p, check_r, phi

logger = logging.getLogger(__name__)


class SignConvention(str, Enum):
    LOSSES_POSITIVE = "losses_positive"
    RETURNS_NEGATED = "returns_negated"


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Ascending loss observations X_(1) <= ... <= X_(N)"""

    losses: np.ndarray
    sign_convention: SignConvention = SignConvention.LOSSES_POSITIVE
    source: str = ""

    def __post_init__(self):
        losses = np.array(self.losses, dtype=float)
        if losses.ndim != 1 or losses.size == 0:
            raise DataError("sample is empty")
        if not np.all(np.isfinite(losses)):
            raise DataError("sample contains non-finite values")
        if np.any(np.diff(losses) < 0):
            raise DataError("losses must be sorted ascending; build samples with from_losses")
        losses.setflags(write=False)
        object.__setattr__(self, "losses", losses)

    @property
    def n(self) -> int:
        return int(self.losses.size)

    @classmethod
    def from_losses(cls, values: Sequence[float], source: str = "") -> "EmpiricalSample":
        return cls(losses=np.sort(np.asarray(values, dtype=float), kind="stable"), source=source)

    @classmethod
    def from_returns(cls, values: Sequence[float], source: str = "") -> "EmpiricalSample":
        """Returns are profit-positive; losses are their negation"""
        losses = -np.asarray(values, dtype=float)
        return cls(
            losses=np.sort(losses, kind="stable"),
            sign_convention=SignConvention.RETURNS_NEGATED,
            source=source,
        )

    def quantile_model(self) -> QuantileModel:
        return empirical(self.losses)


@dataclass(frozen=True, eq=False)
class EstimatorWeights:
    weights: np.ndarray
    params: ParamSet

    @property
    def n(self) -> int:
        return int(self.weights.size)


def tail_start(n: int, p: float) -> int:
    """1-based index ⌈np⌉ of the first order statistic at or above level p"""
    check_p(p)
    return max(math.ceil(round(n * p, 9)), 1)


# weight arrays up to this size are kept (512 of them, about 8 MB); larger n is recomputed
CACHE_MAX_N = 2_000


def estimator_weights(n: int, params: ParamSet) -> EstimatorWeights:
    """
    φ(i/n) normalised to sum 1, i = 1..n.

    Grid points below index ⌈np⌉ get weight 0; the point i/n = p itself is kept.
    """
    if n <= CACHE_MAX_N:
        return _cached_weights(n, params)
    return _compute_weights(n, params)


@lru_cache(maxsize=512)
def _cached_weights(n: int, params: ParamSet) -> EstimatorWeights:
    return _compute_weights(n, params)


def _compute_weights(n: int, params: ParamSet) -> EstimatorWeights:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    k = tail_start(n, params.p)
    u = np.arange(1, n + 1) / n
    raw = np.zeros(n)
    # evaluate from index k on so that i/n rounding just below p still counts as u = p
    raw[k - 1 :] = phi(np.maximum(u[k - 1 :], params.p), params)
    total = raw.sum()
    if not total > 0:
        raise ParameterError(f"estimator weights for {params} do not normalise (sum={total})")
    weights = raw / total
    weights.setflags(write=False)
    return EstimatorWeights(weights=weights, params=params)


class EmpiricalEstimator:
    """Finite-sample versions of the family's measures"""

    @staticmethod
    def egs_hat(sample: EmpiricalSample, params: ParamSet) -> float:
        w = estimator_weights(sample.n, params).weights
        return float(np.dot(sample.losses, w))

    @staticmethod
    def var_hat(sample: EmpiricalSample, p: float) -> float:
        return float(sample.losses[tail_start(sample.n, p) - 1])

    @staticmethod
    def es_hat(sample: EmpiricalSample, p: float) -> float:
        return EmpiricalEstimator.egs_hat(sample, ParamSet(p=p, r=2.0, lam=0.0))

    @staticmethod
    def choquet_hat(sample: EmpiricalSample, h: DistortionFunction) -> float:
        """Exact Choquet integral of the empirical law: Σ X_(i)[h(i/n) - h((i-1)/n)]"""
        return float(np.dot(sample.losses, h.cell_weights(sample.n)))

    @staticmethod
    def egini_hat(sample: EmpiricalSample, r: float) -> float:
        check_r(r)
        return EmpiricalEstimator.choquet_hat(sample, GiniFamily.extended_gini_distortion(r))

    @staticmethod
    def teg_hat(sample: EmpiricalSample, r: float, p: float) -> float:
        return EmpiricalEstimator.choquet_hat(sample, GiniFamily.teg_distortion(r, p))

    @staticmethod
    def egs_exact_hat(sample: EmpiricalSample, params: ParamSet) -> float:
        return EmpiricalEstimator.choquet_hat(sample, GiniFamily.egs_distortion(params))

    @staticmethod
    def gini_mean_difference(values: Sequence[float]) -> float:
        """E|X* - X**| over all n² ordered pairs: (2/n²) Σ (2i - n - 1) x_(i)"""
        x = np.sort(np.asarray(values, dtype=float))
        n = x.size
        if n == 0:
            raise DataError("sample is empty")
        i = np.arange(1, n + 1)
        return float(2.0 * np.dot(2 * i - n - 1, x) / n**2)


egs_hat = EmpiricalEstimator.egs_hat
var_hat = EmpiricalEstimator.var_hat
es_hat = EmpiricalEstimator.es_hat
choquet_hat = EmpiricalEstimator.choquet_hat
egini_hat = EmpiricalEstimator.egini_hat
teg_hat = EmpiricalEstimator.teg_hat
egs_exact_hat = EmpiricalEstimator.egs_exact_hat
gini_mean_difference = EmpiricalEstimator.gini_mean_difference
