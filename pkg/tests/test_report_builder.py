import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from services.ingestion import IngestConfig, ReturnSeriesIngestor, Units
from services.report_builder import (
    DEFAULT_P_GRID,
    DEFAULT_R_GRID,
    LambdaRule,
    ReportCell,
    ReportRow,
    RiskReport,
    RiskReportBuilder,
    build_report,
)
from utils.errors import ParameterError
from utils.estimator import EmpiricalEstimator, EmpiricalSample, estimator_weights, tail_start
from utils.gini_family import ParamSet, lambda_max
from utils.report_formatter import ReportFormatter


@pytest.fixture
def fixture_sample(returns_csv):
    return ReturnSeriesIngestor.ingest(IngestConfig(path=str(returns_csv), units=Units.PERCENT))


@pytest.fixture
def fixture_report(fixture_sample):
    return build_report(fixture_sample)


class TestRiskReportBuilder:
    def test_default_grid_shape(self, fixture_report):
        assert [row.p for row in fixture_report.grid] == list(DEFAULT_P_GRID)
        for row in fixture_report.grid:
            assert [c.r for c in row.cells] == list(DEFAULT_R_GRID)
        assert fixture_report.meta.n == 250

    def test_cells_dominate_es(self, fixture_report):
        for row in fixture_report.grid:
            assert row.var <= row.es + 1e-12
            for cell in row.cells:
                assert cell.egs >= row.es - 1e-12

    def test_lambda_resolved_per_cell(self, fixture_report):
        for row in fixture_report.grid:
            for cell in row.cells:
                assert cell.lam == pytest.approx(0.5 * lambda_max(cell.r, row.p))
                assert cell.coherent

    def test_absolute_rule_flags_incoherent_cells(self, fixture_sample):
        report = build_report(fixture_sample, p_grid=[0.95], r_grid=[2.0, 6.0], lambda_rule=LambdaRule.absolute(1.0))
        assert [c.lam for c in report.grid[0].cells] == [1.0, 1.0]
        # lambda_max(2, .95) = 0.5 but lambda_max(6, .95) is huge
        assert [c.coherent for c in report.grid[0].cells] == [False, True]
        assert any("above lambda_max" in w for w in report.warnings)
        assert report.meta.lambda_rule == "absolute 1"

    def test_json_round_trip(self, fixture_report):
        restored = RiskReport.model_validate_json(ReportFormatter.to_json(fixture_report))
        assert restored == fixture_report

    def test_seed_recorded(self, fixture_sample):
        assert build_report(fixture_sample, p_grid=[0.9], r_grid=[2.0], seed=17).meta.seed == 17

    @pytest.mark.parametrize(
        "p_grid, r_grid",
        [([], [2.0]), ([0.9], []), ([1.0], [2.0]), ([0.9], [1.0])],
    )
    def test_grid_validation(self, p_grid, r_grid):
        with pytest.raises(ParameterError):
            RiskReportBuilder(p_grid, r_grid)

    def test_negative_lambda_rule(self):
        with pytest.raises(ParameterError):
            LambdaRule.fraction(-0.5)


class TestSoftChecks:
    def test_fixture_report_has_no_warnings(self, fixture_report):
        assert fixture_report.warnings == []
        assert not fixture_report.drift.drift

    def test_fixture_egs_non_increasing_in_r(self, fixture_report):
        for row in fixture_report.grid:
            values = [c.egs for c in sorted(row.cells, key=lambda c: c.r)]
            assert values == sorted(values, reverse=True)

    def test_constant_sample_drifts(self):
        drift = RiskReportBuilder.drift_check(EmpiricalSample.from_losses([0.01] * 50))
        assert drift.drift

    def test_symmetric_sample_does_not_drift(self):
        values = np.concatenate([np.linspace(0.1, 1.0, 30), -np.linspace(0.1, 1.0, 30)])
        drift = RiskReportBuilder.drift_check(EmpiricalSample.from_losses(values))
        assert not drift.drift
        assert drift.mean == pytest.approx(0.0, abs=1e-12)

    def test_monotone_warnings(self):
        cells = [
            ReportCell(r=2.0, lam=0.1, egs=0.05, coherent=True),
            ReportCell(r=3.0, lam=0.1, egs=0.06, coherent=True),
            ReportCell(r=6.0, lam=0.1, egs=0.04, coherent=True),
        ]
        row = ReportRow(p=0.95, var=0.02, es=0.03, cells=cells)
        notes = RiskReportBuilder([0.95], [2.0, 3.0, 6.0]).monotone_warnings([row])
        assert notes == ["p=0.95: EGS rises from r=2 to r=3"]


class TestReportFormatter:
    def test_number_formats(self):
        assert ReportFormatter.percent(0.0158) == "1.58%"
        assert ReportFormatter.level(0.95) == "p=95%"
        assert ReportFormatter.column_label(2.0) == "r=2 (GS)"
        assert ReportFormatter.column_label(20.0) == "r=20"

    def test_table_layout(self, fixture_report):
        table = ReportFormatter.format_table(fixture_report)
        lines = table.splitlines()
        assert lines[0].startswith("EGS_hat")
        assert "r=2 (GS)" in lines[0]
        assert set(lines[1]) == {"-"}
        assert sum(line.startswith("VaR=") for line in lines) == 3
        assert sum(line.startswith("ES=") for line in lines) == 3
        assert any(line.startswith("n=250") for line in lines)
        assert any(line.startswith("mean loss=") for line in lines)

    def test_fixture_table_matches_golden(self, fixture_report, golden):
        assert ReportFormatter.format_table(fixture_report) + "\n" == golden("report_table.txt")

    def test_json_uses_lambda_key(self, fixture_report):
        payload = json.loads(ReportFormatter.to_json(fixture_report))
        cell = payload["grid"][0]["cells"][0]
        assert set(cell) == {"r", "lambda", "egs", "coherent"}
        assert payload["meta"]["sign_convention"] == "returns_negated"


tail_losses = arrays(
    dtype=np.float64,
    shape=st.integers(20, 300),
    elements=st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False),
)


class TestTailWeights:
    @pytest.fixture
    def table(self, fixture_sample, midpoint_params):
        return RiskReportBuilder.tail_weights(fixture_sample, midpoint_params)

    def test_rows_run_from_var_to_the_largest_loss(self, table, fixture_sample):
        assert [row.rank for row in table.rows] == list(range(238, 251))
        losses = [row.loss for row in table.rows]
        assert losses == sorted(losses)
        assert losses[0] == table.var
        assert losses[-1] == fixture_sample.losses[-1]

    def test_listed_weights_are_the_estimator_mass(self, table, fixture_sample, midpoint_params):
        weights = estimator_weights(fixture_sample.n, midpoint_params).weights
        listed = [row.weight for row in table.rows]
        assert listed == weights[237:].tolist()
        assert sum(listed) == pytest.approx(weights.sum(), abs=1e-12)
        assert table.total == pytest.approx(1.0, abs=1e-12)

    def test_listing_matches_golden(self, table, golden):
        assert ReportFormatter.format_weights(table) + "\n" == golden("tail_weights.txt")

    @given(
        values=tail_losses,
        p=st.floats(0.5, 0.99),
        r=st.floats(1.2, 30.0),
        fraction=st.floats(0.0, 1.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_weights_recover_the_estimate(self, values, p, r, fraction):
        sample = EmpiricalSample.from_losses(values)
        params = ParamSet.from_fraction(p, r, fraction)
        table = RiskReportBuilder.tail_weights(sample, params)
        assert len(table.rows) == sample.n - tail_start(sample.n, p) + 1
        assert sum(row.weight for row in table.rows) == pytest.approx(1.0, abs=1e-9)
        assert all(row.weight >= -1e-12 for row in table.rows)
        dot = sum(row.loss * row.weight for row in table.rows)
        scale = max(1.0, float(np.max(np.abs(values))))
        assert dot == pytest.approx(EmpiricalEstimator.egs_hat(sample, params), abs=1e-9 * scale)

    def test_report_carries_the_listing(self, fixture_sample, midpoint_params):
        report = build_report(fixture_sample, weights_at=(0.95, 2.0))
        assert report.tail_weights == RiskReportBuilder.tail_weights(fixture_sample, midpoint_params)
        assert "Weighted losses beyond VaR: p=95%, r=2" in ReportFormatter.format_table(report)
        assert RiskReport.model_validate_json(ReportFormatter.to_json(report)) == report

    def test_listing_follows_the_lambda_rule(self, fixture_sample):
        rule = LambdaRule.absolute(0.1)
        report = build_report(fixture_sample, p_grid=[0.9], r_grid=[3.0], lambda_rule=rule, weights_at=(0.9, 3.0))
        assert report.tail_weights.lam == 0.1

    def test_losses_without_returns_column(self):
        sample = EmpiricalSample.from_losses(np.arange(1.0, 21.0) / 100.0)
        table = RiskReportBuilder.tail_weights(sample, ParamSet(p=0.9, r=2.0, lam=0.0))
        text = ReportFormatter.format_weights(table).splitlines()
        assert "return" not in text[1]
        assert len(text) == 8
        assert [line.split("|")[-1].strip() for line in text[3:6]] == ["0.3333"] * 3

    def test_bad_level(self, fixture_sample):
        with pytest.raises(ParameterError):
            build_report(fixture_sample, weights_at=(1.5, 2.0))
