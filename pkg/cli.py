#!/usr/bin/env python3
"""
Command line for the EGS toolkit: compute, report, verify, sensitivity, serve

Exit status: 0 success, 1 usage or parameter error, 2 data or quadrature error,
3 an axiom that should hold was violated
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from config import configure_logging, get_settings
from services.axiom_verifier import AxiomVerifier
from services.ingestion import IngestConfig, ReturnSeriesIngestor, Units
from services.measure_service import DISTRIBUTIONS, MeasureService, resolve_params
from services.report_builder import DEFAULT_P_GRID, DEFAULT_R_GRID, LambdaRule, build_report
from utils.distributions import build, synthetic_sample
from utils.errors import DataError, EGSError, ParameterError, QuadratureError
from utils.estimator import EmpiricalSample
from utils.gini_family import MeasureId
from utils.report_formatter import ReportFormatter
from utils.sensitivity import sensitivity_report

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageErrorParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool reserves 2 for data errors"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_lambda(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=float, help="absolute loading λ")
    group.add_argument("--lambda-frac", dest="lam_frac", type=float, help="λ as a fraction of lambda_max (default 0.5)")


def _add_input(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--input", required=required, help="CSV file with a return column")
    parser.add_argument("--column", default="-1", help="column name or 0-based index (default: last)")
    parser.add_argument("--units", choices=[u.value for u in Units], default=Units.DECIMAL.value)
    parser.add_argument("--no-negate", action="store_true", help="the column already holds losses")
    parser.add_argument("--no-header", action="store_true", help="the file has no header line")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageErrorParser(prog="egs", description="Extended Gini Shortfall risk measures")
    parser.add_argument("--log-level", default="", help="overrides EGS_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageErrorParser)

    compute = sub.add_parser("compute", help="one measure of a distribution or a return series")
    compute.add_argument("--measure", choices=[m.value for m in MeasureId], default=MeasureId.EGS.value)
    compute.add_argument("--dist", choices=DISTRIBUTIONS, default="normal")
    compute.add_argument("--dof", type=float, default=5.0, help="Student-t degrees of freedom")
    compute.add_argument("--loc", type=float, default=0.0)
    compute.add_argument("--scale", type=float, default=1.0)
    compute.add_argument("--quadrature", action="store_true", help="integrate the quantile instead of the closed form")
    compute.add_argument("--p", type=float, default=0.95)
    compute.add_argument("--r", type=float, default=2.0)
    _add_lambda(compute)
    _add_input(compute, required=False)
    compute.add_argument("--json", action="store_true")

    report = sub.add_parser("report", help="VaR / ES / EGS table over p and r")
    report.add_argument("--p", type=float, nargs="+", default=list(DEFAULT_P_GRID))
    report.add_argument("--r", type=float, nargs="+", default=list(DEFAULT_R_GRID))
    _add_lambda(report)
    _add_input(report, required=False)
    report.add_argument("--synthetic", choices=DISTRIBUTIONS, help="use a seeded synthetic loss sample instead of --input")
    report.add_argument("--size", type=int, default=10_000, help="synthetic sample size")
    report.add_argument("--seed", type=int, default=None)
    report.add_argument("--weights", action="store_true", help="also list the sorted tail losses with their weights")
    report.add_argument("--weights-p", type=float, default=0.95, help="level for --weights (default 0.95)")
    report.add_argument("--weights-r", type=float, default=2.0, help="risk aversion for --weights (default 2)")
    report.add_argument("--json", action="store_true")

    verify = sub.add_parser("verify", help="seeded axiom suite on the EGS estimator")
    verify.add_argument("--p", type=float, default=0.95)
    verify.add_argument("--r", type=float, default=2.0)
    _add_lambda(verify)
    verify.add_argument("--trials", type=int, default=1000)
    verify.add_argument("--budget", type=int, default=100_000, help="violation search budget at 1.5·lambda_max")
    verify.add_argument("--tolerance", type=float, default=1e-9)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--json", action="store_true")

    sensitivity = sub.add_parser("sensitivity", help="partial derivatives of the weighting function (JSON)")
    sensitivity.add_argument("--u", type=float, required=True)
    sensitivity.add_argument("--p", type=float, default=0.95)
    sensitivity.add_argument("--r", type=float, default=2.0)
    _add_lambda(sensitivity)
    sensitivity.add_argument("--strict", action="store_true", help="fail at the kink u = p")

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    return parser


def _ingest(args) -> EmpiricalSample:
    config = IngestConfig(
        path=args.input,
        column=args.column,
        units=Units(args.units),
        negate_returns=not args.no_negate,
        header=not args.no_header,
    )
    return ReturnSeriesIngestor.ingest(config)


def cmd_compute(args) -> int:
    measure = MeasureId(args.measure)
    rank_only = measure in (MeasureId.GINI, MeasureId.EGINI)
    params = None if rank_only else resolve_params(args.p, args.r, args.lam, args.lam_frac)
    if args.input:
        source = _ingest(args)
    elif args.quadrature:
        source = build(args.dist, dof=args.dof, loc=args.loc, scale=args.scale)
    else:
        source = args.dist
    value = MeasureService.compute_single(
        source, measure, params, dof=args.dof, loc=args.loc, scale=args.scale, r=args.r if rank_only else None
    )

    if args.json:
        print(value.model_dump_json(by_alias=True, indent=2))
    else:
        print(f"{measure.value} ({value.distribution}) = {value.value:.10g} [{value.method.value}]")
        for note in value.warnings:
            print(f"warning: {note}")
    return EXIT_OK


def cmd_report(args) -> int:
    settings = get_settings()
    if args.input and args.synthetic:
        raise ParameterError("give either --input or --synthetic, not both")
    seed = None
    if args.synthetic:
        seed = settings.seed if args.seed is None else args.seed
        losses = synthetic_sample(build(args.synthetic), args.size, seed)
        sample = EmpiricalSample.from_losses(losses, source=f"synthetic {args.synthetic} n={args.size}")
    elif args.input:
        sample = _ingest(args)
        seed = args.seed
    else:
        raise ParameterError("report needs --input or --synthetic")

    if args.lam is not None:
        rule = LambdaRule.absolute(args.lam)
    else:
        rule = LambdaRule.fraction(settings.lambda_fraction if args.lam_frac is None else args.lam_frac)
    weights_at = (args.weights_p, args.weights_r) if args.weights else None
    report = build_report(sample, args.p, args.r, rule, seed, weights_at)
    print(ReportFormatter.to_json(report) if args.json else ReportFormatter.format_table(report))
    return EXIT_OK


def cmd_verify(args) -> int:
    params = resolve_params(args.p, args.r, args.lam, args.lam_frac)
    suite = AxiomVerifier.run_suite(params, args.trials, args.seed, args.tolerance, args.budget)
    if args.json:
        print(suite.model_dump_json(by_alias=True, indent=2))
    else:
        for result in [*suite.results, suite.cx_spot, suite.violation_search]:
            verdict = "ok" if result.passed else "VIOLATED"
            expected = "" if result.expected_to_hold else " (not expected to hold)"
            print(f"{result.check:<24} {verdict:<9} {result.violations}/{result.trials}{expected}")
    return EXIT_OK if suite.all_expected_passed else EXIT_VERIFY


def cmd_sensitivity(args) -> int:
    params = resolve_params(args.p, args.r, args.lam, args.lam_frac)
    report = sensitivity_report(args.u, params, strict=args.strict)
    print(report.model_dump_json(by_alias=True, indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run("main:app", host=args.host or settings.host, port=args.port or settings.port)
    return EXIT_OK


COMMANDS = {
    "compute": cmd_compute,
    "report": cmd_report,
    "verify": cmd_verify,
    "sensitivity": cmd_sensitivity,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as e:
        print(f"error: {e}", file=sys.stderr)
        print(json.dumps({"estimate": e.estimate, "error_bound": e.error_bound}))
        return EXIT_DATA
    except (DataError, EGSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
