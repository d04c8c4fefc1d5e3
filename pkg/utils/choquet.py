"""
Choquet Engine
Evaluates signed Choquet integrals  I = ∫₀¹ F⁻¹(u) w(u) du  by adaptive quadrature
restricted to the support of the weight function
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from config import get_settings
from utils.errors import DomainError, ParameterError, QuadratureError

logger = logging.getLogger(__name__)

# Evaluation points are kept inside [EPS, 1 - EPS]
EPS = 1e-15


def clamp(u: float) -> float:
    return min(max(u, EPS), 1.0 - EPS)


@dataclass(frozen=True)
class QuantileModel:
    """
    Left-continuous generalized inverse  F⁻¹(u) = inf{x : F(x) >= u}.

    This is also the VaR convention: VaR_p(X) = F⁻¹(p). The two flags mark
    integrable singularities at u -> 0+ and u -> 1-. `upper_tail(s)` may be supplied
    to evaluate F⁻¹(1 - s) without losing the small tail probability to rounding.
    """

    eval: Callable[[float], float]
    lower_unbounded: bool = False
    upper_unbounded: bool = False
    upper_tail: Optional[Callable[[float], float]] = None
    name: str = "quantile"

    @property
    def tail_flags(self) -> Tuple[bool, bool]:
        return (self.lower_unbounded, self.upper_unbounded)

    @property
    def bounded(self) -> bool:
        return not (self.lower_unbounded or self.upper_unbounded)

    def __call__(self, u: float) -> float:
        return float(self.eval(clamp(u)))

    def tail(self, s: float) -> float:
        """F⁻¹(1 - s)"""
        if self.upper_tail is not None:
            return float(self.upper_tail(max(s, EPS)))
        return self(1.0 - s)

    def shift(self, m: float) -> "QuantileModel":
        upper_tail = None
        if self.upper_tail is not None:
            upper_tail = lambda s: self.upper_tail(s) + m
        return QuantileModel(
            eval=lambda u: self.eval(u) + m,
            lower_unbounded=self.lower_unbounded,
            upper_unbounded=self.upper_unbounded,
            upper_tail=upper_tail,
            name=f"{self.name}{m:+g}",
        )

    def scale(self, c: float) -> "QuantileModel":
        if not c > 0:
            raise ParameterError(f"scale factor must be positive, got {c}")
        upper_tail = None
        if self.upper_tail is not None:
            upper_tail = lambda s: c * self.upper_tail(s)
        return QuantileModel(
            eval=lambda u: c * self.eval(u),
            lower_unbounded=self.lower_unbounded,
            upper_unbounded=self.upper_unbounded,
            upper_tail=upper_tail,
            name=f"{c:g}*{self.name}",
        )

    def comonotone_sum(self, other: "QuantileModel") -> "QuantileModel":
        """Quantile of X + Y for co-monotone X, Y: F⁻¹_{X+Y} = F⁻¹_X + F⁻¹_Y"""
        upper_tail = None
        if self.upper_tail is not None or other.upper_tail is not None:
            upper_tail = lambda s: self.tail(s) + other.tail(s)
        return QuantileModel(
            eval=lambda u: self.eval(u) + other.eval(u),
            lower_unbounded=self.lower_unbounded or other.lower_unbounded,
            upper_unbounded=self.upper_unbounded or other.upper_unbounded,
            upper_tail=upper_tail,
            name=f"{self.name}+{other.name}",
        )

    def is_monotone(self, grid: Optional[Sequence[float]] = None) -> bool:
        """Spot check that F⁻¹ is non-decreasing on a finite grid"""
        if grid is None:
            grid = np.linspace(0.001, 0.999, 999)
        values = np.array([self(u) for u in grid])
        return bool(np.all(np.diff(values) >= -1e-12 * np.maximum(1.0, np.abs(values[1:]))))


@dataclass(frozen=True)
class WeightFunction:
    """A weight u -> w(u) on [0, 1], identically zero outside `support`"""

    eval: Callable[[float], float]
    support: Tuple[float, float] = (0.0, 1.0)
    breakpoints: Tuple[float, ...] = ()
    name: str = "weight"

    def __post_init__(self):
        a, b = self.support
        if not 0.0 <= a < b <= 1.0:
            raise ParameterError(f"weight support must be a sub-interval of [0, 1], got {self.support}")

    def __call__(self, u: float) -> float:
        a, b = self.support
        if u < a or u > b:
            return 0.0
        return float(self.eval(u))

    @cached_property
    def magnitude(self) -> float:
        """max|w| over a few sample points times the support length"""
        a, b = self.support
        points = [a, 0.5 * (a + b), b, *self.breakpoints]
        values = [abs(self.eval(clamp(x))) for x in points if a <= x <= b]
        peak = max((v for v in values if math.isfinite(v)), default=0.0)
        return (peak if peak > 0 else 1.0) * (b - a)

    @cached_property
    def total_mass(self) -> float:
        one = QuantileModel(eval=lambda u: 1.0, name="one")
        return ChoquetEngine.choquet_integral(one, self, tol=1e-12)


@dataclass(frozen=True)
class DistortionFunction:
    """
    A distortion h on [0, 1] of finite variation with h(0) = 0.

    Only piecewise-differentiable h are supported: `derivative` must be given and
    `kinks` lists the points where it jumps. Variability distortions also have h(1) = 0.
    """

    eval: Callable[[float], float]
    derivative: Callable[[float], float]
    kinks: Tuple[float, ...] = ()
    support: Tuple[float, float] = (0.0, 1.0)
    variability: bool = False
    name: str = "distortion"

    def __post_init__(self):
        if abs(self.eval(0.0)) > 1e-12:
            raise ParameterError(f"{self.name}: h(0) must be 0, got {self.eval(0.0)}")
        if self.variability and abs(self.eval(1.0)) > 1e-12:
            raise ParameterError(f"{self.name}: variability distortion needs h(1) = 0, got {self.eval(1.0)}")

    def weight_function(self) -> WeightFunction:
        a, b = self.support
        return WeightFunction(
            eval=self.derivative,
            support=self.support,
            breakpoints=tuple(k for k in self.kinks if a < k < b),
            name=f"d{self.name}",
        )

    def cell_weights(self, n: int) -> np.ndarray:
        """h(i/n) - h((i-1)/n), i = 1..n: exact Choquet weights of an n-point empirical law"""
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        grid = np.fromiter((self.eval(k / n) for k in range(n + 1)), dtype=float, count=n + 1)
        return np.diff(grid)

    @classmethod
    def identity(cls) -> "DistortionFunction":
        return cls(eval=lambda u: u, derivative=lambda u: 1.0, name="identity")


class ChoquetEngine:
    """Adaptive quadrature of F⁻¹ against a weight on the weight's support"""

    @staticmethod
    def default_tol(q: QuantileModel) -> float:
        settings = get_settings()
        return settings.tol_bounded if q.bounded else settings.tol_unbounded

    @staticmethod
    def choquet_integral(q: QuantileModel, w: WeightFunction, tol: Optional[float] = None) -> float:
        """
        ∫ F⁻¹(u) w(u) du over w.support.

        The integrand is normalised by w.magnitude, so `tol` bounds the error relative
        to the weight's scale; for w ≡ 1 on [0, 1] it is an absolute bound.
        """
        if tol is None:
            tol = ChoquetEngine.default_tol(q)
        if not tol > 0:
            raise ParameterError(f"tol must be positive, got {tol}")

        scale = w.magnitude
        total = 0.0
        for a, b in ChoquetEngine._segments(q, w):
            total += ChoquetEngine._integrate_segment(q, w, a, b, tol, scale)
        return total * scale

    @staticmethod
    def choquet_from_distortion(q: QuantileModel, h: DistortionFunction, tol: Optional[float] = None) -> float:
        """∫ F⁻¹ dh, split at the kinks of h"""
        return ChoquetEngine.choquet_integral(q, h.weight_function(), tol)

    @staticmethod
    def _segments(q: QuantileModel, w: WeightFunction) -> List[Tuple[float, float]]:
        a, b = w.support
        cuts = sorted({x for x in w.breakpoints if a < x < b})
        if not cuts and a == 0.0 and b == 1.0 and q.lower_unbounded and q.upper_unbounded:
            # one singular end per segment
            cuts = [0.5]
        edges = [a, *cuts, b]
        return list(zip(edges[:-1], edges[1:]))

    @staticmethod
    def _integrate_segment(
        q: QuantileModel,
        w: WeightFunction,
        a: float,
        b: float,
        tol: float,
        scale: float,
    ) -> float:
        if b == 1.0 and q.upper_unbounded:
            # u = 1 - exp(-t)
            logger.debug("tail substitution on [%g, 1) for %s", a, q.name)

            def integrand(t: float) -> float:
                s = math.exp(-t)
                return ChoquetEngine._checked(q.tail(s) * w.eval(1.0 - s) * s / scale, 1.0 - s)

            lo, hi = -math.log1p(-a), math.inf
        elif a == 0.0 and q.lower_unbounded:
            # u = exp(-t)
            logger.debug("tail substitution on (0, %g] for %s", b, q.name)

            def integrand(t: float) -> float:
                u = math.exp(-t)
                return ChoquetEngine._checked(q(u) * w.eval(clamp(u)) * u / scale, u)

            lo, hi = -math.log(b), math.inf
        else:

            def integrand(u: float) -> float:
                return ChoquetEngine._checked(q(u) * w.eval(clamp(u)) / scale, u)

            lo, hi = a, b

        result = integrate.quad(
            integrand,
            lo,
            hi,
            epsabs=tol,
            epsrel=tol,
            limit=get_settings().quad_limit,
            full_output=1,
        )
        value, abserr = result[0], result[1]
        if len(result) > 3 and abserr > tol * max(1.0, abs(value)):
            raise QuadratureError(
                f"quadrature on [{a:g}, {b:g}] for {q.name} x {w.name} did not converge: {result[3]}",
                estimate=value * scale,
                error_bound=abserr * scale,
            )
        return value

    @staticmethod
    def _checked(value: float, u: float) -> float:
        if math.isnan(value):
            raise DomainError(f"quantile model produced NaN at u={u!r}", u=u)
        return value


choquet_integral = ChoquetEngine.choquet_integral
choquet_from_distortion = ChoquetEngine.choquet_from_distortion
