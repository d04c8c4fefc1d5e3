"""
Axiom Verifier
Seeded Monte Carlo checks of the risk-measure axioms on the empirical EGS estimator,
a search for subadditivity violations beyond the coherence bound, and a convex-order
spot check on mean-preserving spreads
"""
import asyncio
import logging
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from config import get_settings
from utils.errors import ParameterError
from utils.estimator import EmpiricalEstimator, EmpiricalSample, estimator_weights
from utils.gini_family import ParamSet

logger = logging.getLogger(__name__)

MIN_POINTS, MAX_POINTS = 50, 500


class Axiom(str, Enum):
    MONOTONICITY = "monotonicity"
    TRANSLATION = "translation"
    HOMOGENEITY = "homogeneity"
    SUBADDITIVITY = "subadditivity"
    COMONOTONE_ADDITIVITY = "comonotone_additivity"
    EGS_DOMINATES_ES = "egs_dominates_es"


class AxiomCase(BaseModel):
    model_config = ConfigDict(frozen=True)

    axiom: Axiom
    trial_count: int = 1000
    seed: int = 0
    tolerance: float = 1e-9

    @field_validator("trial_count")
    @classmethod
    def _positive_trials(cls, v: int) -> int:
        if v < 1:
            raise ParameterError(f"trial_count must be >= 1, got {v}")
        return v

    @field_validator("tolerance")
    @classmethod
    def _positive_tolerance(cls, v: float) -> float:
        if not v > 0:
            raise ParameterError(f"tolerance must be positive, got {v}")
        return v


class WorstCase(BaseModel):
    trial: int
    n: int
    gap: float
    description: str
    x: Optional[List[float]] = None
    y: Optional[List[float]] = None


class VerifierResult(BaseModel):
    check: str
    case: Optional[AxiomCase] = None
    params: ParamSet
    trials: int
    violations: int
    worst_case: Optional[WorstCase] = None
    expected_to_hold: bool
    passed: bool


class VerificationSuite(BaseModel):
    params: ParamSet
    seed: int
    results: List[VerifierResult]
    cx_spot: VerifierResult
    violation_search: VerifierResult

    @property
    def all_expected_passed(self) -> bool:
        checks = [*self.results, self.cx_spot]
        return all(r.passed for r in checks if r.expected_to_hold)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, trial), so trials can run in any order"""
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def draw_scenarios(rng: np.random.Generator, n: int) -> np.ndarray:
    """Normal bulk, a shifted lognormal tail or a two-point law"""
    kind = rng.integers(3)
    if kind == 0:
        return rng.normal(0.0, rng.uniform(0.5, 2.0), n)
    if kind == 1:
        return rng.lognormal(0.0, rng.uniform(0.25, 1.0), n) - 1.0
    low, high = sorted(rng.uniform(-2.0, 5.0, 2))
    return np.where(rng.random(n) < rng.uniform(0.02, 0.5), high, low)


def draw_joint(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(X, Y) on shared scenario rows: independent, positively or negatively dependent"""
    x = draw_scenarios(rng, n)
    mode = rng.integers(3)
    if mode == 0:
        return x, draw_scenarios(rng, n)
    sign = 1.0 if mode == 1 else -1.0
    return x, sign * rng.uniform(0.2, 2.0) * x + draw_scenarios(rng, n)


def rho(values: np.ndarray, params: ParamSet) -> float:
    return EmpiricalEstimator.egs_hat(EmpiricalSample.from_losses(values), params)


def _scale(*arrays: np.ndarray) -> float:
    return max(1.0, *(float(np.max(np.abs(a))) for a in arrays))


# one trial per axiom: returns (gap, n); gap > tolerance·scale is a violation, already scaled


def _monotonicity(rng, params):
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    x = draw_scenarios(rng, n)
    y = x + np.abs(draw_scenarios(rng, n))
    return (rho(x, params) - rho(y, params)) / _scale(x, y), n


def _translation(rng, params):
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    x = draw_scenarios(rng, n)
    m = rng.uniform(-10.0, 10.0)
    return abs(rho(x + m, params) - rho(x, params) - m) / _scale(x, x + m), n


def _homogeneity(rng, params):
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    x = draw_scenarios(rng, n)
    c = rng.uniform(0.1, 10.0)
    return abs(rho(c * x, params) - c * rho(x, params)) / _scale(c * x), n


def _subadditivity(rng, params):
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    x, y = draw_joint(rng, n)
    return (rho(x + y, params) - rho(x, params) - rho(y, params)) / _scale(x, y, x + y), n


def _comonotone_additivity(rng, params):
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    # F⁻¹_X(U_i), F⁻¹_Y(U_i) on one sorted grid
    x = np.sort(draw_scenarios(rng, n))
    y = np.sort(draw_scenarios(rng, n))
    return abs(rho(x + y, params) - rho(x, params) - rho(y, params)) / _scale(x, y, x + y), n


def _egs_dominates_es(rng, params):
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    sample = EmpiricalSample.from_losses(draw_scenarios(rng, n))
    gap = EmpiricalEstimator.es_hat(sample, params.p) - EmpiricalEstimator.egs_hat(sample, params)
    return gap / _scale(sample.losses), n


TRIALS: Dict[Axiom, Callable] = {
    Axiom.MONOTONICITY: _monotonicity,
    Axiom.TRANSLATION: _translation,
    Axiom.HOMOGENEITY: _homogeneity,
    Axiom.SUBADDITIVITY: _subadditivity,
    Axiom.COMONOTONE_ADDITIVITY: _comonotone_additivity,
    Axiom.EGS_DOMINATES_ES: _egs_dominates_es,
}


def expected_to_hold(axiom: Axiom, params: ParamSet) -> bool:
    """Monotonicity and subadditivity need λ <= lambda_max; the rest hold for every λ >= 0"""
    if axiom in (Axiom.MONOTONICITY, Axiom.SUBADDITIVITY):
        return params.coherent
    return True


class AxiomVerifier:
    """Runs seeded trials against the EGS estimator and tallies violations"""

    @staticmethod
    def verify_axiom(case: AxiomCase, params: ParamSet) -> VerifierResult:
        trial_fn: Callable = TRIALS[case.axiom]
        violations = 0
        worst: Optional[WorstCase] = None
        for t in range(case.trial_count):
            gap, n = trial_fn(trial_rng(case.seed, t), params)
            if gap > case.tolerance:
                violations += 1
            if worst is None or gap > worst.gap:
                worst = WorstCase(trial=t, n=n, gap=gap, description=f"{case.axiom.value} trial {t}: n={n}, gap={gap:.3e}")

        result = VerifierResult(
            check=case.axiom.value,
            case=case,
            params=params,
            trials=case.trial_count,
            violations=violations,
            worst_case=worst,
            expected_to_hold=expected_to_hold(case.axiom, params),
            passed=violations == 0,
        )
        logger.info("%s: %d/%d violations", case.axiom.value, violations, case.trial_count)
        return result

    @staticmethod
    def find_subadditivity_violation(
        params: ParamSet,
        budget: int = 100_000,
        seed: Optional[int] = None,
        tolerance: float = 1e-9,
        max_points: int = MAX_POINTS,
    ) -> VerifierResult:
        """
        Look for X, Y with egs_hat(X+Y) > egs_hat(X) + egs_hat(Y) + tolerance.

        First the two-indicator family: X = 1_A, Y = 1_B where A and B are the top m
        scenarios of n sharing m-1 of them. Its gap is w_(i-1) - w_i at i = n-m+1, which is
        positive exactly where the estimator weights decrease. Each n costs one unit of
        budget; what is left goes to random joint draws.
        """
        if budget < 1:
            raise ParameterError(f"budget must be >= 1, got {budget}")
        if params.coherent:
            logger.info("lambda=%g is within the coherence bound; no violation expected", params.lam)
        seed = get_settings().seed if seed is None else seed
        used = 0

        # Step 1: overlapping indicator pairs
        for n in range(2, max_points + 1):
            if used >= budget:
                break
            used += 1
            w = estimator_weights(n, params).weights
            drops = w[:-1] - w[1:]
            j = int(np.argmax(drops))
            if drops[j] > tolerance:
                x, y = _indicator_pair(n, i=j + 2)
                gap = rho(x + y, params) - rho(x, params) - rho(y, params)
                if gap > tolerance:
                    return AxiomVerifier._violation(params, used, n, gap, x, y, "overlapping indicators")

        # Step 2: random joint scenarios
        for t in range(budget - used):
            rng = trial_rng(seed, t)
            gap, n = _subadditivity(rng, params)
            if gap > tolerance:
                x, y = _replay_joint(seed, t)
                raw_gap = rho(x + y, params) - rho(x, params) - rho(y, params)
                return AxiomVerifier._violation(params, used + t + 1, n, raw_gap, x, y, "random joint draw")

        return VerifierResult(
            check="subadditivity_search",
            params=params,
            trials=budget,
            violations=0,
            expected_to_hold=params.coherent,
            passed=True,
        )

    @staticmethod
    def _violation(params, trials, n, gap, x, y, how) -> VerifierResult:
        logger.info("subadditivity violation after %d trials (%s, n=%d, gap=%.3e)", trials, how, n, gap)
        return VerifierResult(
            check="subadditivity_search",
            params=params,
            trials=trials,
            violations=1,
            worst_case=WorstCase(
                trial=trials - 1,
                n=n,
                gap=gap,
                description=f"{how}: rho(X+Y) exceeds rho(X)+rho(Y) by {gap:.6g}",
                x=[float(v) for v in x],
                y=[float(v) for v in y],
            ),
            expected_to_hold=params.coherent,
            passed=False,
        )

    @staticmethod
    def verify_cx_spot(
        params: ParamSet,
        budget: int = 1000,
        seed: Optional[int] = None,
        tolerance: float = 1e-9,
    ) -> VerifierResult:
        """
        Y = X + e·ε with ε = ±1 equally likely given X, on a lattice of spreads e >= 0.
        Y dominates X in convex order, so EGini_r(Y) >= EGini_r(X), and EGS(Y) >= EGS(X)
        when λ is coherent. Every third trial scales X about its mean instead. Uses the
        exact (law-invariant) Choquet weights, so X and its duplicate have equal values.
        """
        if budget < 1:
            raise ParameterError(f"budget must be >= 1, got {budget}")
        seed = get_settings().seed if seed is None else seed
        violations = 0
        worst: Optional[WorstCase] = None
        for t in range(budget):
            rng = trial_rng(seed, t)
            n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
            x = draw_scenarios(rng, n)
            if t % 3 == 2:
                c = rng.uniform(1.0, 3.0)
                before, after = x, x.mean() + c * (x - x.mean())
            else:
                spread = 0.1 * rng.integers(0, 11, n)
                before, after = np.concatenate([x, x]), np.concatenate([x + spread, x - spread])
            gap = _cx_gap(before, after, params) / _scale(before, after)
            if gap > tolerance:
                violations += 1
            if worst is None or gap > worst.gap:
                worst = WorstCase(trial=t, n=n, gap=gap, description=f"cx trial {t}: n={n}, gap={gap:.3e}")

        logger.info("cx spot check: %d/%d violations", violations, budget)
        return VerifierResult(
            check="cx_spot",
            params=params,
            trials=budget,
            violations=violations,
            worst_case=worst,
            expected_to_hold=True,
            passed=violations == 0,
        )

    @staticmethod
    async def run_suite_async(
        params: ParamSet,
        trials: int = 1000,
        seed: Optional[int] = None,
        tolerance: float = 1e-9,
        search_budget: int = 100_000,
    ) -> VerificationSuite:
        """All six axioms, the cx spot check and a violation search at 1.5·lambda_max"""
        seed = get_settings().seed if seed is None else seed
        loop = asyncio.get_running_loop()
        beyond = ParamSet(p=params.p, r=params.r, lam=1.5 * params.lambda_max)

        axiom_tasks = [
            loop.run_in_executor(
                None,
                AxiomVerifier.verify_axiom,
                AxiomCase(axiom=axiom, trial_count=trials, seed=seed, tolerance=tolerance),
                params,
            )
            for axiom in Axiom
        ]
        cx_task = loop.run_in_executor(None, AxiomVerifier.verify_cx_spot, params, trials, seed, tolerance)
        search_task = loop.run_in_executor(
            None, AxiomVerifier.find_subadditivity_violation, beyond, search_budget, seed, tolerance
        )
        *results, cx, search = await asyncio.gather(*axiom_tasks, cx_task, search_task)
        return VerificationSuite(params=params, seed=seed, results=results, cx_spot=cx, violation_search=search)

    @staticmethod
    def run_suite(
        params: ParamSet,
        trials: int = 1000,
        seed: Optional[int] = None,
        tolerance: float = 1e-9,
        search_budget: int = 100_000,
    ) -> VerificationSuite:
        return asyncio.run(AxiomVerifier.run_suite_async(params, trials, seed, tolerance, search_budget))


def _indicator_pair(n: int, i: int) -> Tuple[np.ndarray, np.ndarray]:
    """1_A, 1_B over n scenarios; A and B hold m = n-i+1 scenarios each and share m-1"""
    m = n - i + 1
    x = np.zeros(n)
    y = np.zeros(n)
    x[n - m :] = 1.0
    y[n - m - 1 : n - 1] = 1.0
    return x, y


def _replay_joint(seed: int, trial: int) -> Tuple[np.ndarray, np.ndarray]:
    rng = trial_rng(seed, trial)
    n = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
    return draw_joint(rng, n)


def _cx_gap(before: np.ndarray, after: np.ndarray, params: ParamSet) -> float:
    """Largest shortfall of a convex-order increase among EGini_r and (coherent) EGS"""
    x, y = EmpiricalSample.from_losses(before), EmpiricalSample.from_losses(after)
    gaps = [EmpiricalEstimator.egini_hat(x, params.r) - EmpiricalEstimator.egini_hat(y, params.r)]
    if params.coherent:
        gaps.append(EmpiricalEstimator.egs_exact_hat(x, params) - EmpiricalEstimator.egs_exact_hat(y, params))
    return max(gaps)


verify_axiom = AxiomVerifier.verify_axiom
find_subadditivity_violation = AxiomVerifier.find_subadditivity_violation
verify_cx_spot = AxiomVerifier.verify_cx_spot
run_suite = AxiomVerifier.run_suite
