import asyncio
from importlib.metadata import PackageNotFoundError, version
from typing import List, Optional, Tuple

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from config import configure_logging, get_settings
from services.axiom_verifier import AxiomCase, AxiomVerifier, VerifierResult
from services.ingestion import ReturnSeriesIngestor, Units
from services.measure_service import DISTRIBUTIONS, MeasureService, resolve_params
from services.report_builder import DEFAULT_P_GRID, DEFAULT_R_GRID, LambdaRule, RiskReport, RiskReportBuilder
from utils.errors import DataError, EGSError, ParameterError
from utils.gini_family import MeasureId, MeasureValue, ParamSet
from utils.sensitivity import SensitivityReport, sensitivity_report

configure_logging()

app = FastAPI(
    title="Extended Gini Shortfall API",
    description="VaR, ES, Gini-type variability and Extended Gini Shortfall for distributions and return series",
    version="1.0.0",
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class ReportRequest(BaseModel):
    returns: List[float]
    units: Units = Units.DECIMAL
    negate_returns: bool = True
    p_grid: List[float] = list(DEFAULT_P_GRID)
    r_grid: List[float] = list(DEFAULT_R_GRID)
    lambda_rule: LambdaRule = LambdaRule()
    weights_at: Optional[Tuple[float, float]] = None


class VerifyRequest(BaseModel):
    case: AxiomCase
    params: ParamSet


def status_for(error: EGSError) -> int:
    if isinstance(error, ParameterError):
        return 400
    if isinstance(error, DataError):
        return 422
    return 500


def http_error(error: EGSError) -> HTTPException:
    return HTTPException(status_code=status_for(error), detail=str(error))


@app.exception_handler(EGSError)
async def egs_error_handler(request: Request, exc: EGSError):
    # raised while validating a request body, before the endpoint runs
    return JSONResponse(status_code=status_for(exc), content={"detail": str(exc)})


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "Extended Gini Shortfall API",
        "endpoints": ["/health", "/measures/{measure_id}", "/report", "/sensitivity", "/verify"],
        "description": "Use GET /measures/EGS?dist=normal&p=0.95&r=2&lambda_frac=0.5 for a single value",
    }


@app.get("/health")
async def health():
    versions = {}
    for package in ("numpy", "scipy", "pandas", "pydantic", "fastapi"):
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "not installed"
    return {"status": "ok", "versions": versions}


@app.get("/measures/{measure_id}", response_model=MeasureValue)
async def get_measure(
    measure_id: MeasureId,
    dist: str = "normal",
    dof: float = 5.0,
    loc: float = 0.0,
    scale: float = 1.0,
    p: Optional[float] = None,
    r: float = 2.0,
    lam: Optional[float] = Query(None, alias="lambda"),
    lambda_frac: Optional[float] = None,
):
    """
    One measure of a named distribution

    Args:
        dist: uniform01, uniform (U[-1,1]), normal or student_t
        p: prudence level; Gini needs none
        lam / lambda_frac: absolute loading or fraction of lambda_max, at most one
    """
    try:
        if dist not in DISTRIBUTIONS:
            raise ParameterError(f"unknown distribution '{dist}', expected one of {list(DISTRIBUTIONS)}")
        params = None if p is None else resolve_params(p, r, lam, lambda_frac)
        # EGini has no prudence level: without p it runs on r alone
        aversion = r if params is None and measure_id == MeasureId.EGINI else None
        return MeasureService.compute_single(dist, measure_id, params, dof=dof, loc=loc, scale=scale, r=aversion)
    except EGSError as e:
        raise http_error(e)


@app.post("/report", response_model=RiskReport, response_model_by_alias=True)
async def post_report(request: ReportRequest):
    """VaR / ES / EGS grid for a posted return series"""
    try:
        sample = ReturnSeriesIngestor.to_sample(
            request.returns, units=request.units, negate_returns=request.negate_returns, source="request"
        )
        builder = RiskReportBuilder(request.p_grid, request.r_grid, request.lambda_rule)
        return await builder.build(sample, weights_at=request.weights_at)
    except EGSError as e:
        raise http_error(e)


@app.get("/sensitivity", response_model=SensitivityReport)
async def get_sensitivity(
    u: float,
    p: float,
    r: float = 2.0,
    lam: Optional[float] = Query(None, alias="lambda"),
    lambda_frac: Optional[float] = None,
):
    """Partial derivatives of the EGS weighting function at u"""
    try:
        return sensitivity_report(u, resolve_params(p, r, lam, lambda_frac))
    except EGSError as e:
        raise http_error(e)


@app.post("/verify", response_model=VerifierResult)
async def post_verify(request: VerifyRequest):
    """Run one seeded axiom check on the EGS estimator"""
    try:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, AxiomVerifier.verify_axiom, request.case, request.params)
    except EGSError as e:
        raise http_error(e)


if __name__ == "__main__":
    import uvicorn

    settings = get_settings()
    uvicorn.run(app, host=settings.host, port=settings.port)
