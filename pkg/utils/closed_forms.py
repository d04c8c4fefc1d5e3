"""
Closed Forms
ES and Tail Extended Gini of spherical laws given by a density generator g, their
location-scale (elliptical) versions, and the uniform / normal / Student-t cases
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy import integrate, special

from config import get_settings
from utils.choquet import QuantileModel
from utils.errors import FormulaDomainError, NoFiniteMeanError, ParameterError, QuadratureError
from utils.gini_family import ParamSet, check_p, check_r, warn_incoherent

logger = logging.getLogger(__name__)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def theta_from_dof(n: float) -> float:
    return (n + 1.0) / 2.0


def dof_from_theta(theta: float) -> float:
    return 2.0 * theta - 1.0


def k_theta(theta: float) -> float:
    """k_θ = θ - 1/2, which is n/2 for n degrees of freedom"""
    return theta - 0.5


def student_t_constant(theta: float) -> float:
    """c_θ = 1 / (√(2k_θ) B(θ - 1/2, 1/2)), with the Beta function taken through betaln"""
    if not theta > 0.5:
        raise ParameterError(f"Student-t generator needs theta > 1/2, got {theta}")
    k = k_theta(theta)
    return math.exp(-special.betaln(theta - 0.5, 0.5)) / math.sqrt(2.0 * k)


def student_t_pdf(theta: float, z: float) -> float:
    k = k_theta(theta)
    return student_t_constant(theta) * (1.0 + z * z / (2.0 * k)) ** (-theta)


@dataclass(frozen=True)
class SphericalSpec:
    """
    A one-dimensional spherical law with density f(z) = c·g(z²/2).

    tail_generator is Ḡ(y) = c∫_y^∞ g(x)dx, so that E[Z | Z > z] = Ḡ(z²/2)/(1 - F(z)).
    upper_tail_quantile(s) = F⁻¹(1 - s) keeps precision far in the tail.
    """

    name: str
    density_generator: Callable[[float], float]
    normalizing_constant: float
    tail_generator: Callable[[float], float]
    cdf: Callable[[float], float]
    sf: Callable[[float], float]
    quantile: Callable[[float], float]
    upper_tail_quantile: Callable[[float], float]
    variance: Optional[float] = None
    lower_support: float = -math.inf
    upper_support: float = math.inf
    theta: Optional[float] = None

    def pdf(self, z: float) -> float:
        return self.normalizing_constant * self.density_generator(z * z / 2.0)

    def quantile_model(self) -> QuantileModel:
        unbounded = math.isinf(self.upper_support)
        return QuantileModel(
            eval=self.quantile,
            lower_unbounded=unbounded,
            upper_unbounded=unbounded,
            upper_tail=self.upper_tail_quantile if unbounded else None,
            name=self.name,
        )

    def total_probability(self) -> float:
        return _line_integral(self.pdf, self.lower_support, self.upper_support, 1e-12)

    def variance_from_tail_generator(self) -> float:
        """∫ Ḡ(z²/2) dz over the support, equal to Var(Z) when it is finite"""
        return _line_integral(
            lambda z: self.tail_generator(z * z / 2.0), self.lower_support, self.upper_support, 1e-10
        )

    @classmethod
    def uniform(cls) -> "SphericalSpec":
        """U[-1, 1]: g = 1 on [0, 1/2], c = 1/2"""
        return cls(
            name="uniform",
            density_generator=lambda x: 1.0 if 0.0 <= x <= 0.5 else 0.0,
            normalizing_constant=0.5,
            tail_generator=lambda y: max(0.25 - 0.5 * y, 0.0),
            cdf=lambda z: min(max((z + 1.0) / 2.0, 0.0), 1.0),
            sf=lambda z: min(max((1.0 - z) / 2.0, 0.0), 1.0),
            quantile=lambda u: 2.0 * u - 1.0,
            upper_tail_quantile=lambda s: 1.0 - 2.0 * s,
            variance=1.0 / 3.0,
            lower_support=-1.0,
            upper_support=1.0,
        )

    @classmethod
    def normal(cls) -> "SphericalSpec":
        """N(0, 1): g = e^(-x), c = 1/√(2π), and Ḡ(z²/2) is the normal density itself"""
        return cls(
            name="normal",
            density_generator=lambda x: math.exp(-x),
            normalizing_constant=INV_SQRT_2PI,
            tail_generator=lambda y: INV_SQRT_2PI * math.exp(-y),
            cdf=lambda z: float(special.ndtr(z)),
            sf=lambda z: float(special.ndtr(-z)),
            quantile=lambda u: float(special.ndtri(u)),
            upper_tail_quantile=lambda s: -float(special.ndtri(s)),
            variance=1.0,
        )

    @classmethod
    def student_t(cls, theta: float) -> "SphericalSpec":
        """Student-t generator g = (1 + x/k_θ)^(-θ), i.e. n = 2θ - 1 degrees of freedom"""
        c = student_t_constant(theta)
        k = k_theta(theta)
        n = dof_from_theta(theta)

        def tail_generator(y: float) -> float:
            if theta <= 1.0:
                raise NoFiniteMeanError(f"Student-t with theta={theta:g} (n={n:g}) has no finite mean")
            return c * k / (theta - 1.0) * (1.0 + y / k) ** (-(theta - 1.0))

        return cls(
            name=f"student_t[{n:g}]",
            density_generator=lambda x: (1.0 + x / k) ** (-theta),
            normalizing_constant=c,
            tail_generator=tail_generator,
            cdf=lambda z: float(special.stdtr(n, z)),
            sf=lambda z: float(special.stdtr(n, -z)),
            quantile=lambda u: float(special.stdtrit(n, u)),
            upper_tail_quantile=lambda s: -float(special.stdtrit(n, s)),
            variance=n / (n - 2.0) if n > 2.0 else None,
            theta=theta,
        )

    @classmethod
    def student_t_dof(cls, n: float) -> "SphericalSpec":
        if not n > 0:
            raise ParameterError(f"degrees of freedom must be positive, got {n}")
        return cls.student_t(theta_from_dof(n))


def _line_integral(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """∫_lo^hi f, infinite ends mapped to finite ones by z = a ± t/(1 - t)"""
    pieces = []
    if math.isinf(lo) and math.isinf(hi):
        pieces = [(-math.inf, 0.0), (0.0, math.inf)]
    else:
        pieces = [(lo, hi)]

    total = 0.0
    for a, b in pieces:
        if math.isinf(b):
            g = lambda t, a=a: f(a + t / (1.0 - t)) / (1.0 - t) ** 2 if t < 1.0 else 0.0
            a_, b_ = 0.0, 1.0
        elif math.isinf(a):
            g = lambda t, b=b: f(b - t / (1.0 - t)) / (1.0 - t) ** 2 if t < 1.0 else 0.0
            a_, b_ = 0.0, 1.0
        else:
            g, a_, b_ = f, a, b
        result = integrate.quad(
            g, a_, b_, epsabs=0.0, epsrel=tol, limit=get_settings().quad_limit, full_output=1
        )
        value, abserr = result[0], result[1]
        if len(result) > 3 and abserr > tol * max(1.0, abs(value)):
            raise QuadratureError(f"line integral on [{a}, {b}] did not converge: {result[3]}", value, abserr)
        total += value
    return total


class ClosedForms:
    """ES and TEG of spherical / elliptical laws"""

    @staticmethod
    def es_elliptical(spec: SphericalSpec, p: float) -> float:
        """ES_p(Z) = Ḡ(z_p²/2)/(1 - p)"""
        check_p(p)
        z = spec.quantile(p)
        return spec.tail_generator(z * z / 2.0) / (1.0 - p)

    @staticmethod
    def scaled_tail_expectation(spec: SphericalSpec, r: float, p: float, tol: Optional[float] = None) -> float:
        """
        (1/(1-p)) ∫_{z_p}^∞ (S(z)/(1-p))^(r-2) Ḡ(z²/2) f(z) dz with S = 1 - F.

        This is E[(1 - F(Z))^(r-2) Ḡ(Z²/2) | Z > z_p] divided by (1-p)^(r-2), which keeps
        the integrand of order one for large r.
        """
        tol = tol or get_settings().tol_unbounded
        q = 1.0 - p
        lo = spec.lower_support if p == 0.0 else spec.quantile(p)

        def integrand(z: float) -> float:
            density = spec.pdf(z)
            survival = spec.sf(z)
            if density <= 0.0 or survival <= 0.0:
                return 0.0
            gbar = spec.tail_generator(z * z / 2.0)
            if gbar <= 0.0:
                return 0.0
            return (survival / q) ** (r - 2.0) * gbar * density

        return _line_integral(integrand, lo, spec.upper_support, tol) / q

    @staticmethod
    def teg_elliptical(spec: SphericalSpec, r: float, p: float, tol: Optional[float] = None) -> float:
        """
        TEG_{r,p}(Z) = (2r(r-1)/(1-p))·E[(1-F(Z))^(r-2) Ḡ(Z²/2) | Z > z_p] + 2(1-r)(1-p)^(r-2)·ES_p(Z)

        p = 0 gives EGini_r(Z), with ES_0 = E[Z] = 0 for a spherical law.
        """
        check_r(r)
        check_p(p, allow_zero=True)
        q = 1.0 - p
        conditional = ClosedForms.scaled_tail_expectation(spec, r, p, tol)
        es_p = 0.0 if p == 0.0 else ClosedForms.es_elliptical(spec, p)
        value = 2.0 * q ** (r - 2.0) * (r * (r - 1.0) * conditional / q + (1.0 - r) * es_p)
        return 0.0 if -1e-12 < value < 0.0 else value

    @staticmethod
    def egini_elliptical(spec: SphericalSpec, r: float, tol: Optional[float] = None) -> float:
        return ClosedForms.teg_elliptical(spec, r, 0.0, tol)

    # uniform on [-1, 1]

    @staticmethod
    def es_uniform(p: float) -> float:
        check_p(p)
        z = 2.0 * p - 1.0
        return (1.0 - z * z) / (4.0 * (1.0 - p))

    @staticmethod
    def teg_uniform(r: float, p: float) -> float:
        """2(r-1)(1-p)^(r-1)/(r+1), the tail term of the elliptical formula worked out for U[-1, 1]"""
        check_r(r)
        check_p(p, allow_zero=True)
        return 2.0 * (r - 1.0) * (1.0 - p) ** (r - 1.0) / (r + 1.0)

    @staticmethod
    def egini_uniform(r: float) -> float:
        check_r(r)
        return 2.0 * (r - 1.0) / (r + 1.0)

    # normal

    @staticmethod
    def es_normal(p: float) -> float:
        check_p(p)
        z = float(special.ndtri(p))
        return INV_SQRT_2PI * math.exp(-z * z / 2.0) / (1.0 - p)

    @staticmethod
    def teg_normal(r: float, p: float, tol: Optional[float] = None) -> float:
        return ClosedForms.teg_elliptical(SphericalSpec.normal(), r, p, tol)

    @staticmethod
    def gini_normal() -> float:
        return 2.0 / math.sqrt(math.pi)

    # Student-t

    @staticmethod
    def es_student_t(theta: float, p: float) -> float:
        check_p(p)
        if not theta > 1.0:
            raise NoFiniteMeanError(f"Student-t ES needs theta > 1 (n > 1), got theta={theta:g}")
        k = k_theta(theta)
        z = float(special.stdtrit(dof_from_theta(theta), p))
        c = student_t_constant(theta)
        return c * k / ((1.0 - p) * (theta - 1.0)) * (1.0 + z * z / (2.0 * k)) ** (-(theta - 1.0))

    @staticmethod
    def teg_student_t(theta: float, r: float, p: float, tol: Optional[float] = None) -> float:
        """
        Student-t TEG with Ḡ(z²/2) written through the θ-1 density:
        Ḡ(z²/2) = c_θ k_θ / (c_{θ-1}(θ-1)) · f_{θ-1}(√(k_{θ-1}/k_θ) z).

        f_{θ-1} exists only for θ > 3/2.
        """
        if not theta > 1.0:
            raise NoFiniteMeanError(f"Student-t TEG needs theta > 1 (n > 1), got theta={theta:g}")
        if not theta > 1.5:
            raise FormulaDomainError(
                f"Student-t TEG through f_(theta-1) needs theta > 3/2 (n > 2), got theta={theta:g}"
            )
        spec = SphericalSpec.student_t(theta)
        k, k_lower = k_theta(theta), k_theta(theta - 1.0)
        coef = student_t_constant(theta) * k / (student_t_constant(theta - 1.0) * (theta - 1.0))
        ratio = math.sqrt(k_lower / k)
        shifted = dataclasses.replace(
            spec, tail_generator=lambda y: coef * student_t_pdf(theta - 1.0, ratio * math.sqrt(2.0 * y))
        )
        return ClosedForms.teg_elliptical(shifted, r, p, tol)


@dataclass(frozen=True)
class LocationScale:
    """X = alpha + beta·Z for a spherical Z"""

    base: SphericalSpec
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ParameterError(f"scale beta must be positive, got {self.beta}")

    def es(self, p: float) -> float:
        return self.alpha + self.beta * ClosedForms.es_elliptical(self.base, p)

    def teg(self, r: float, p: float, tol: Optional[float] = None) -> float:
        return self.beta * ClosedForms.teg_elliptical(self.base, r, p, tol)

    def egs(self, params: ParamSet, tol: Optional[float] = None) -> float:
        if not params.coherent:
            warn_incoherent(params)
        return self.es(params.p) + params.lam * self.teg(params.r, params.p, tol)

    def quantile_model(self) -> QuantileModel:
        return self.base.quantile_model().scale(self.beta).shift(self.alpha)


es_elliptical = ClosedForms.es_elliptical
teg_elliptical = ClosedForms.teg_elliptical
egini_elliptical = ClosedForms.egini_elliptical
es_uniform = ClosedForms.es_uniform
teg_uniform = ClosedForms.teg_uniform
egini_uniform = ClosedForms.egini_uniform
es_normal = ClosedForms.es_normal
teg_normal = ClosedForms.teg_normal
gini_normal = ClosedForms.gini_normal
es_student_t = ClosedForms.es_student_t
teg_student_t = ClosedForms.teg_student_t
