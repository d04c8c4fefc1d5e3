"""
Quantile models for the distributions the toolkit knows by name
"""
import math
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import special

from utils.choquet import EPS, QuantileModel
from utils.errors import ParameterError


def constant(c: float) -> QuantileModel:
    return QuantileModel(eval=lambda u: c, name=f"const({c:g})")


def uniform(a: float = 0.0, b: float = 1.0) -> QuantileModel:
    if not b > a:
        raise ParameterError(f"uniform needs a < b, got [{a}, {b}]")
    width = b - a
    return QuantileModel(eval=lambda u: a + width * u, name=f"U[{a:g},{b:g}]")


def uniform01() -> QuantileModel:
    return uniform(0.0, 1.0)


def standard_uniform() -> QuantileModel:
    """U[-1, 1], the spherical uniform"""
    return uniform(-1.0, 1.0)


def normal(loc: float = 0.0, scale: float = 1.0) -> QuantileModel:
    if not scale > 0:
        raise ParameterError(f"normal scale must be positive, got {scale}")
    return QuantileModel(
        eval=lambda u: loc + scale * special.ndtri(u),
        lower_unbounded=True,
        upper_unbounded=True,
        upper_tail=lambda s: loc - scale * special.ndtri(s),
        name=f"N({loc:g},{scale:g}^2)",
    )


def student_t(dof: float, loc: float = 0.0, scale: float = 1.0) -> QuantileModel:
    if not dof > 0:
        raise ParameterError(f"Student-t degrees of freedom must be positive, got {dof}")
    if not scale > 0:
        raise ParameterError(f"Student-t scale must be positive, got {scale}")
    return QuantileModel(
        eval=lambda u: loc + scale * special.stdtrit(dof, u),
        lower_unbounded=True,
        upper_unbounded=True,
        upper_tail=lambda s: loc - scale * special.stdtrit(dof, s),
        name=f"t({dof:g})",
    )


def empirical(values: Sequence[float]) -> QuantileModel:
    """Step quantile of an n-point law: F⁻¹(u) = x_(⌈nu⌉)"""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    if n == 0:
        raise ParameterError("empirical quantile needs at least one value")

    def quantile(u: float) -> float:
        k = min(max(math.ceil(round(n * u, 9)), 1), n)
        return float(ordered[k - 1])

    return QuantileModel(eval=quantile, name=f"empirical(n={n})")


MODEL_BUILDERS: Dict[str, Callable[..., QuantileModel]] = {
    "uniform01": lambda **kw: uniform01(),
    "uniform": lambda **kw: standard_uniform(),
    "normal": lambda **kw: normal(),
    "student_t": lambda dof=5.0, **kw: student_t(dof),
}


def build(name: str, dof: Optional[float] = None, loc: float = 0.0, scale: float = 1.0) -> QuantileModel:
    """
    Build a named quantile model, optionally moved to location `loc` and scale `scale`

    Args:
        name: one of uniform01, uniform (U[-1,1]), normal, student_t
        dof: Student-t degrees of freedom
    """
    if name not in MODEL_BUILDERS:
        raise ParameterError(f"unknown distribution '{name}', expected one of {sorted(MODEL_BUILDERS)}")
    kwargs = {"dof": dof} if dof is not None else {}
    model = MODEL_BUILDERS[name](**kwargs)
    if scale != 1.0:
        model = model.scale(scale)
    if loc != 0.0:
        model = model.shift(loc)
    return model


def synthetic_sample(q: QuantileModel, n: int, seed: int, stratified: bool = False) -> np.ndarray:
    """
    Draw n values from q by inversion

    Stratified draws use F⁻¹((i - U_i)/n), one point per probability cell, which
    removes most of the sampling noise while keeping every draw distributed as q.
    """
    if n < 1:
        raise ParameterError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    if stratified:
        u = (np.arange(1, n + 1) - u) / n
        rng.shuffle(u)
    u = np.clip(u, EPS, 1.0 - EPS)
    return np.fromiter((q(x) for x in u), dtype=float, count=n)
