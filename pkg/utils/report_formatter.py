"""
Report Formatter
Formats a RiskReport as the VaR / ES / EGS table, the tail weight listing and JSON
"""
from typing import List

from services.report_builder import ReportRow, RiskReport, TailWeights
from utils.estimator import SignConvention

FIRST_COLUMN = 14
COLUMN = 12


class ReportFormatter:
    """Human table (percent, 2 decimals) and machine JSON (full precision)"""

    @staticmethod
    def percent(value: float, digits: int = 2) -> str:
        """0.0158 -> '1.58%'"""
        return f"{100.0 * value:.{digits}f}%"

    @staticmethod
    def level(p: float) -> str:
        return f"p={100.0 * p:g}%"

    @staticmethod
    def column_label(r: float) -> str:
        label = f"r={r:g}"
        return f"{label} (GS)" if r == 2.0 else label

    @staticmethod
    def _line(first: str, cells: List[str]) -> str:
        return first.ljust(FIRST_COLUMN) + "".join(f"| {cell:>{COLUMN - 2}} " for cell in cells).rstrip()

    @staticmethod
    def row_block(row: ReportRow, columns: int) -> List[str]:
        """Three lines per level: the level, VaR with the EGS cells, then ES"""
        blank = [""] * columns
        cells = [ReportFormatter.percent(c.egs) for c in row.cells]
        return [
            ReportFormatter._line(ReportFormatter.level(row.p), blank),
            ReportFormatter._line(f"VaR={ReportFormatter.percent(row.var)}", cells),
            ReportFormatter._line(f"ES={ReportFormatter.percent(row.es)}", blank),
        ]

    @staticmethod
    def format_table(report: RiskReport) -> str:
        if not report.grid:
            return ""
        r_values = [c.r for c in report.grid[0].cells]
        header = ReportFormatter._line("EGS_hat", [ReportFormatter.column_label(r) for r in r_values])
        rule = "-" * len(header)

        lines = [header, rule]
        for row in report.grid:
            lines.extend(ReportFormatter.row_block(row, len(r_values)))
            lines.append(rule)

        lines.append(f"n={report.meta.n}  lambda: {report.meta.lambda_rule}  ({report.meta.sign_convention.value})")
        lines.append(
            f"mean loss={report.drift.mean:.6g}  stderr={report.drift.stderr:.6g}  "
            f"drift={'yes' if report.drift.drift else 'no'}  [{report.drift.note}]"
        )
        lines.extend(f"warning: {w}" for w in report.warnings)
        if report.tail_weights is not None:
            lines.extend(["", ReportFormatter.format_weights(report.tail_weights)])
        return "\n".join(lines)

    @staticmethod
    def format_weights(table: TailWeights) -> str:
        """Sorted tail losses with their weights; returns are shown too when the series was negated"""
        negated = table.sign_convention == SignConvention.RETURNS_NEGATED
        labels = ["return", "loss", "weight"] if negated else ["loss", "weight"]
        header = ReportFormatter._line("rank", labels)
        rule = "-" * len(header)

        lines = [
            f"Weighted losses beyond VaR: {ReportFormatter.level(table.p)}, r={table.r:g}, lambda={table.lam:.6g}",
            header,
            rule,
        ]
        for row in table.rows:
            cells = [ReportFormatter.percent(row.loss, 4), f"{row.weight:.4f}"]
            if negated:
                cells.insert(0, ReportFormatter.percent(-row.loss, 4))
            lines.append(ReportFormatter._line(f"i={row.rank}", cells))
        lines.append(rule)
        lines.append(
            f"total weight={table.total:.4f}  rows={len(table.rows)} of n={table.n}  "
            f"VaR={ReportFormatter.percent(table.var)}"
        )
        return "\n".join(lines)

    @staticmethod
    def to_json(report: RiskReport) -> str:
        return report.model_dump_json(by_alias=True, indent=2)
