import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from services.ingestion import IngestConfig, ReturnSeriesIngestor, Units
from utils.errors import DataError
from utils.estimator import SignConvention


def write_csv(tmp_path, text, name="returns.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestFixtureFile:
    def test_reads_last_column_by_default(self, returns_csv):
        sample = ReturnSeriesIngestor.ingest(IngestConfig(path=str(returns_csv), units=Units.PERCENT))
        assert sample.n == 250
        assert sample.sign_convention == SignConvention.RETURNS_NEGATED
        assert np.isclose(sample.losses, 0.009198).any()

    @pytest.mark.parametrize("column", ["return", "-1", 1])
    def test_column_by_name_or_position(self, returns_csv, column):
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=str(returns_csv), column=column))
        assert values.size == 250
        assert values[0] == pytest.approx(-0.9198)

    def test_comment_lines_are_skipped(self, returns_csv):
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=str(returns_csv)))
        assert np.all(np.isfinite(values))


class TestConversions:
    def test_percent_and_negation(self, tmp_path):
        path = write_csv(tmp_path, "r\n1.5\n-2.0\n")
        sample = ReturnSeriesIngestor.ingest(IngestConfig(path=path, units=Units.PERCENT))
        assert sample.losses.tolist() == pytest.approx([-0.015, 0.02])

    def test_losses_kept_as_is(self, tmp_path):
        path = write_csv(tmp_path, "loss\n0.3\n-0.1\n")
        sample = ReturnSeriesIngestor.ingest(IngestConfig(path=path, negate_returns=False))
        assert sample.losses.tolist() == pytest.approx([-0.1, 0.3])
        assert sample.sign_convention == SignConvention.LOSSES_POSITIVE

    def test_no_header(self, tmp_path):
        path = write_csv(tmp_path, "2023-01-01,0.01\n2023-01-02,-0.02\n")
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=path, header=False))
        assert values.tolist() == pytest.approx([0.01, -0.02])

    def test_empty_series(self):
        with pytest.raises(DataError):
            ReturnSeriesIngestor.to_sample([])

    def test_non_finite_in_memory(self):
        with pytest.raises(DataError) as excinfo:
            ReturnSeriesIngestor.to_sample([0.1, float("nan")])
        assert excinfo.value.row == 2


class TestBadInput:
    def test_non_numeric_names_row(self, tmp_path):
        path = write_csv(tmp_path, "date,return\n2023-01-01,0.5\n2023-01-02,abc\n")
        with pytest.raises(DataError, match="row 2") as excinfo:
            ReturnSeriesIngestor.read_column(IngestConfig(path=path))
        assert excinfo.value.row == 2
        assert "abc" in str(excinfo.value)

    def test_missing_cell(self, tmp_path):
        path = write_csv(tmp_path, "date,return\n2023-01-01,\n2023-01-02,0.1\n")
        with pytest.raises(DataError, match="missing value in data row 1"):
            ReturnSeriesIngestor.read_column(IngestConfig(path=path))

    def test_infinite_value(self, tmp_path):
        path = write_csv(tmp_path, "return\n0.1\n0.2\ninf\n")
        with pytest.raises(DataError) as excinfo:
            ReturnSeriesIngestor.read_column(IngestConfig(path=path))
        assert excinfo.value.row == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            ReturnSeriesIngestor.read_column(IngestConfig(path=str(tmp_path / "nope.csv")))

    def test_unknown_column(self, returns_csv):
        with pytest.raises(DataError, match="column 'close' not found"):
            ReturnSeriesIngestor.read_column(IngestConfig(path=str(returns_csv), column="close"))

    def test_column_index_out_of_range(self, returns_csv):
        with pytest.raises(DataError, match="out of range"):
            ReturnSeriesIngestor.read_column(IngestConfig(path=str(returns_csv), column=5))

    def test_header_only(self, tmp_path):
        path = write_csv(tmp_path, "date,return\n")
        with pytest.raises(DataError):
            ReturnSeriesIngestor.read_column(IngestConfig(path=path))


class TestNumericHeaders:
    TEXT = "1,0\n0.10,0.20\n0.30,0.40\n"

    @pytest.mark.parametrize("column, expected", [("0", [0.2, 0.4]), ("1", [0.1, 0.3])])
    def test_header_name_wins_over_position(self, tmp_path, column, expected):
        path = write_csv(tmp_path, self.TEXT)
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=path, column=column))
        assert values.tolist() == pytest.approx(expected)

    def test_integer_is_always_a_position(self, tmp_path):
        path = write_csv(tmp_path, self.TEXT)
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=path, column=0))
        assert values.tolist() == pytest.approx([0.1, 0.3])

    def test_digits_without_header_are_positions(self, tmp_path):
        path = write_csv(tmp_path, self.TEXT)
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=path, column="1", header=False))
        assert values.tolist() == pytest.approx([0.0, 0.2, 0.4])

    def test_unmatched_digits_fall_back_to_position(self, tmp_path):
        path = write_csv(tmp_path, "2023,2024\n0.1,0.2\n")
        values = ReturnSeriesIngestor.read_column(IngestConfig(path=path, column="-1"))
        assert values.tolist() == pytest.approx([0.2])


# no subnormals: dividing them by 100 loses digits
normal_floats = st.floats(-50.0, 50.0).filter(lambda x: x == 0.0 or abs(x) > 1e-300)


class TestUnits:
    @given(returns=st.lists(normal_floats, min_size=1, max_size=100))
    @settings(max_examples=50, deadline=None)
    def test_percent_is_decimal_over_one_hundred(self, returns):
        as_decimal = ReturnSeriesIngestor.to_sample(returns, units=Units.DECIMAL)
        as_percent = ReturnSeriesIngestor.to_sample(returns, units=Units.PERCENT)
        np.testing.assert_allclose(as_decimal.losses, 100.0 * as_percent.losses, rtol=1e-14, atol=0.0)

    def test_fixture_file_in_both_units(self, returns_csv):
        as_decimal = ReturnSeriesIngestor.ingest(IngestConfig(path=str(returns_csv), units=Units.DECIMAL))
        as_percent = ReturnSeriesIngestor.ingest(IngestConfig(path=str(returns_csv), units=Units.PERCENT))
        assert as_decimal.n == as_percent.n == 250
        np.testing.assert_allclose(as_decimal.losses, 100.0 * as_percent.losses, rtol=1e-14, atol=0.0)
