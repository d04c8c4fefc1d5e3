"""
Return Series Ingestion
Reads one return column from a CSV file and turns it into a loss sample
"""
import logging
from enum import Enum
from typing import Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from utils.errors import DataError
from utils.estimator import EmpiricalSample

logger = logging.getLogger(__name__)


class Units(str, Enum):
    DECIMAL = "decimal"
    PERCENT = "percent"


class IngestConfig(BaseModel):
    """
    Where and how to read the series.

    column is a header name or a 0-based position; -1 picks the last column.
    """

    path: str
    column: Union[int, str] = -1
    units: Units = Units.DECIMAL
    negate_returns: bool = True
    header: bool = True


class ReturnSeriesIngestor:
    """CSV -> validated decimal returns -> ascending losses"""

    @staticmethod
    def read_column(config: IngestConfig) -> np.ndarray:
        """
        Read the configured column as floats

        Raises:
            DataError: unreadable file, unknown column, or a missing, non-numeric or
                non-finite cell (the message names the 1-based data row)
        """
        try:
            frame = pd.read_csv(
                config.path,
                comment="#",
                header=0 if config.header else None,
                dtype=str,
                skipinitialspace=True,
            )
        except FileNotFoundError as e:
            raise DataError(f"input file not found: {config.path}") from e
        except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
            raise DataError(f"cannot parse {config.path}: {e}") from e
        except pd.errors.EmptyDataError as e:
            raise DataError(f"{config.path} contains no data") from e

        raw = ReturnSeriesIngestor._select(frame, config)
        values = pd.to_numeric(raw.str.strip(), errors="coerce")
        for row, (cell, value) in enumerate(zip(raw, values), start=1):
            if pd.isna(cell):
                raise DataError(f"missing value in data row {row}", row=row)
            if pd.isna(value):
                raise DataError(f"non-numeric value '{cell}' in data row {row}", row=row)
            if not np.isfinite(value):
                raise DataError(f"non-finite value '{cell}' in data row {row}", row=row)

        if values.empty:
            raise DataError(f"{config.path} contains no data rows")
        return values.to_numpy(dtype=float)

    @staticmethod
    def _select(frame: pd.DataFrame, config: IngestConfig) -> pd.Series:
        column = config.column
        # a header name wins over the same text read as a position
        if config.header and isinstance(column, str) and column in frame.columns:
            return frame[column]
        if isinstance(column, str) and not column.lstrip("-").isdigit():
            if column not in frame.columns:
                raise DataError(f"column '{column}' not found; available: {list(frame.columns)}")
            return frame[column]
        position = int(column)
        if not -frame.shape[1] <= position < frame.shape[1]:
            raise DataError(f"column index {position} out of range for {frame.shape[1]} columns")
        return frame.iloc[:, position]

    @staticmethod
    def to_sample(
        returns: Sequence[float],
        units: Units = Units.DECIMAL,
        negate_returns: bool = True,
        source: str = "",
    ) -> EmpiricalSample:
        values = np.asarray(returns, dtype=float)
        if values.size == 0:
            raise DataError("return series is empty")
        if not np.all(np.isfinite(values)):
            row = int(np.flatnonzero(~np.isfinite(values))[0]) + 1
            raise DataError(f"non-finite value in data row {row}", row=row)
        if units == Units.PERCENT:
            values = values / 100.0
        if negate_returns:
            return EmpiricalSample.from_returns(values, source=source)
        return EmpiricalSample.from_losses(values, source=source)

    @staticmethod
    def ingest(config: IngestConfig) -> EmpiricalSample:
        returns = ReturnSeriesIngestor.read_column(config)
        sample = ReturnSeriesIngestor.to_sample(
            returns, units=config.units, negate_returns=config.negate_returns, source=config.path
        )
        logger.info(
            "ingested %s: %d rows read, %d kept, %s, units=%s",
            config.path,
            returns.size,
            sample.n,
            sample.sign_convention.value,
            config.units.value,
        )
        return sample


ingest = ReturnSeriesIngestor.ingest
