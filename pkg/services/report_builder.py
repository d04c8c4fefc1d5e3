"""
Risk Report Builder
Computes the VaR / ES / EGS grid over prudence levels p and risk-aversion levels r
for one loss sample
"""
import asyncio
import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.errors import ParameterError
from utils.estimator import EmpiricalEstimator, EmpiricalSample, SignConvention, estimator_weights, tail_start
from utils.gini_family import ParamSet, check_p, check_r, lambda_max

logger = logging.getLogger(__name__)

DEFAULT_P_GRID = (0.90, 0.95, 0.99)
DEFAULT_R_GRID = (2.0, 3.0, 6.0, 20.0, 30.0)


class LambdaRule(BaseModel):
    """λ per cell: a fraction of lambda_max(r, p), or one absolute value for every cell"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["fraction", "absolute"] = "fraction"
    value: float = 0.5

    @model_validator(mode="after")
    def _check_value(self) -> "LambdaRule":
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise ParameterError(f"lambda rule value must be a finite real >= 0, got {self.value}")
        return self

    @classmethod
    def fraction(cls, value: float = 0.5) -> "LambdaRule":
        return cls(kind="fraction", value=value)

    @classmethod
    def absolute(cls, value: float) -> "LambdaRule":
        return cls(kind="absolute", value=value)

    def resolve(self, r: float, p: float) -> float:
        if self.kind == "absolute":
            return self.value
        return self.value * lambda_max(r, p)

    def describe(self) -> str:
        if self.kind == "absolute":
            return f"absolute {self.value:g}"
        return f"fraction {self.value:g} of lambda_max"


class ReportCell(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    r: float
    lam: float = Field(alias="lambda")
    egs: float
    coherent: bool


class ReportRow(BaseModel):
    p: float
    var: float
    es: float
    cells: List[ReportCell]


class ReportMeta(BaseModel):
    n: int
    source: str
    lambda_rule: str
    seed: Optional[int] = None
    sign_convention: SignConvention


class DriftCheck(BaseModel):
    """|mean| > 2·stderr on the loss series; a rough flag, not a stationarity test"""

    mean: float
    stderr: float
    drift: bool
    note: str = "non-statistical check: |mean| > 2 standard errors"


class TailWeight(BaseModel):
    rank: int
    loss: float
    weight: float


class TailWeights(BaseModel):
    """Order statistics from VaR up with the estimator weight each one carries"""

    model_config = ConfigDict(populate_by_name=True)

    p: float
    r: float
    lam: float = Field(alias="lambda")
    n: int
    var: float
    rows: List[TailWeight]
    total: float
    sign_convention: SignConvention


class RiskReport(BaseModel):
    meta: ReportMeta
    grid: List[ReportRow]
    drift: DriftCheck
    warnings: List[str] = []
    tail_weights: Optional[TailWeights] = None


class RiskReportBuilder:
    """Builds one report row per p concurrently; cells inside a row re-resolve λ per (r, p)"""

    def __init__(
        self,
        p_grid: Sequence[float] = DEFAULT_P_GRID,
        r_grid: Sequence[float] = DEFAULT_R_GRID,
        lambda_rule: Optional[LambdaRule] = None,
    ):
        if not p_grid or not r_grid:
            raise ParameterError("p and r grids must be non-empty")
        for p in p_grid:
            check_p(p)
        for r in r_grid:
            check_r(r)
        self.p_grid = [float(p) for p in p_grid]
        self.r_grid = [float(r) for r in r_grid]
        self.lambda_rule = lambda_rule or LambdaRule.fraction()

    def build_row(self, sample: EmpiricalSample, p: float) -> ReportRow:
        cells = []
        for r in self.r_grid:
            params = ParamSet(p=p, r=r, lam=self.lambda_rule.resolve(r, p))
            cells.append(
                ReportCell(r=r, lam=params.lam, egs=EmpiricalEstimator.egs_hat(sample, params), coherent=params.coherent)
            )
        return ReportRow(
            p=p,
            var=EmpiricalEstimator.var_hat(sample, p),
            es=EmpiricalEstimator.es_hat(sample, p),
            cells=cells,
        )

    @staticmethod
    def tail_weights(sample: EmpiricalSample, params: ParamSet) -> TailWeights:
        """
        Sorted losses from index ⌈np⌉ to n with their normalised estimator weights

        Weights below ⌈np⌉ are zero, so the listed ones sum to 1 and
        dot(loss, weight) over the rows is the EGS estimate.
        """
        k = tail_start(sample.n, params.p)
        weights = estimator_weights(sample.n, params).weights
        rows = [
            TailWeight(rank=i, loss=float(sample.losses[i - 1]), weight=float(weights[i - 1]))
            for i in range(k, sample.n + 1)
        ]
        return TailWeights(
            p=params.p,
            r=params.r,
            lam=params.lam,
            n=sample.n,
            var=EmpiricalEstimator.var_hat(sample, params.p),
            rows=rows,
            total=float(weights[k - 1 :].sum()),
            sign_convention=sample.sign_convention,
        )

    async def build(
        self,
        sample: EmpiricalSample,
        seed: Optional[int] = None,
        weights_at: Optional[Tuple[float, float]] = None,
    ) -> RiskReport:
        """
        Compute every row and run the soft checks

        Args:
            sample: ascending losses
            seed: recorded in the metadata when the sample was generated
            weights_at: (p, r) for the tail weight listing; λ follows the report rule

        Returns:
            RiskReport; rows whose EGS increases with r are reported in `warnings`
        """
        loop = asyncio.get_running_loop()

        # Step 1: rows in parallel
        rows = await asyncio.gather(*(loop.run_in_executor(None, self.build_row, sample, p) for p in self.p_grid))

        # Step 2: soft checks
        notes = self.monotone_warnings(rows)
        for incoherent in (c for row in rows for c in row.cells if not c.coherent):
            notes.append(f"cell r={incoherent.r:g} uses lambda={incoherent.lam:g} above lambda_max")
        drift = self.drift_check(sample)
        if drift.drift:
            notes.append(f"possible drift: mean loss {drift.mean:.6g} exceeds 2 standard errors ({drift.stderr:.6g})")
            logger.warning("possible drift in %s: mean=%g stderr=%g", sample.source or "sample", drift.mean, drift.stderr)

        return RiskReport(
            meta=ReportMeta(
                n=sample.n,
                source=sample.source,
                lambda_rule=self.lambda_rule.describe(),
                seed=seed,
                sign_convention=sample.sign_convention,
            ),
            grid=list(rows),
            drift=drift,
            warnings=notes,
            tail_weights=self._weights_at(sample, weights_at),
        )

    def _weights_at(self, sample: EmpiricalSample, weights_at: Optional[Tuple[float, float]]) -> Optional[TailWeights]:
        if weights_at is None:
            return None
        p, r = weights_at
        return self.tail_weights(sample, ParamSet(p=p, r=r, lam=self.lambda_rule.resolve(r, p)))

    def monotone_warnings(self, rows: Sequence[ReportRow]) -> List[str]:
        notes = []
        for row in rows:
            ordered = sorted(row.cells, key=lambda c: c.r)
            for lower, higher in zip(ordered, ordered[1:]):
                if higher.egs > lower.egs + 1e-12 * max(1.0, abs(lower.egs)):
                    message = f"p={row.p:g}: EGS rises from r={lower.r:g} to r={higher.r:g}"
                    logger.warning(message)
                    notes.append(message)
        return notes

    @staticmethod
    def drift_check(sample: EmpiricalSample) -> DriftCheck:
        mean = float(np.mean(sample.losses))
        stderr = float(np.std(sample.losses, ddof=1) / math.sqrt(sample.n)) if sample.n > 1 else 0.0
        return DriftCheck(mean=mean, stderr=stderr, drift=abs(mean) > 2.0 * stderr)


def build_report(
    sample: EmpiricalSample,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    r_grid: Sequence[float] = DEFAULT_R_GRID,
    lambda_rule: Optional[LambdaRule] = None,
    seed: Optional[int] = None,
    weights_at: Optional[Tuple[float, float]] = None,
) -> RiskReport:
    """Synchronous entry point; do not call from inside a running event loop"""
    return asyncio.run(RiskReportBuilder(p_grid, r_grid, lambda_rule).build(sample, seed, weights_at))
