"""Reading monthly price series downloaded from FRED as CSV."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from spillwatch.exceptions import IngestionError
from spillwatch.marginals.returns import PriceSeries

logger = logging.getLogger(__name__)

# FRED renamed the date column at some point; both spellings are in the wild.
DATE_COLUMNS = ("DATE", "observation_date")
MISSING_MARKER = "."


def _first_row(mask: pd.Series) -> int | None:
    """File line of the first row where `mask` holds; the header is line 1."""
    hits = np.flatnonzero(mask.to_numpy())
    return int(hits[0]) + 2 if hits.size else None


def load_fred_csv(path: Path | str, drop_missing: bool = False) -> PriceSeries:
    """Load a two-column FRED CSV (date, value) into a price series.

    Args:
        path: The CSV file.
        drop_missing: Skip rows whose value is FRED's "." missing marker instead
            of failing on them.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError("file not found", path=str(path))
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise IngestionError(f"not a readable CSV file: {e}", path=str(path)) from e

    date_columns = [c for c in df.columns if c in DATE_COLUMNS]
    if len(df.columns) != 2 or len(date_columns) != 1:
        raise IngestionError(
            f"expected a date column ({' or '.join(DATE_COLUMNS)}) and one value column, "
            f"got {list(df.columns)}",
            path=str(path),
        )
    date_column = date_columns[0]
    value_column = next(c for c in df.columns if c != date_column)

    dates = pd.to_datetime(df[date_column].str.strip(), format="%Y-%m-%d", errors="coerce")
    raw_values = df[value_column].str.strip()
    missing = raw_values == MISSING_MARKER
    values = pd.to_numeric(raw_values.where(~missing), errors="coerce")

    checks = [
        (dates.isna(), "unparseable date"),
        (values.isna() & ~missing, "unparseable value"),
        (values <= 0, "price must be positive"),
        (dates.duplicated() & dates.notna(), "duplicate date"),
    ]
    if not drop_missing:
        checks.append((missing, "missing value '.' (pass drop_missing to skip such rows)"))
    for mask, message in checks:
        row = _first_row(mask)
        if row is not None:
            raise IngestionError(
                f"{message}: {df.iloc[row - 2].tolist()}", path=str(path), row=row
            )

    n_dropped = int(missing.sum())
    if n_dropped:
        logger.warning(f"{path}: dropped {n_dropped} row(s) with missing values")

    kept = pd.DataFrame({"date": dates, "value": values})[~missing.to_numpy()]
    kept = kept.sort_values("date")
    if len(kept) == 0:
        raise IngestionError("no prices in file", path=str(path))
    return PriceSeries(
        name=value_column,
        dates=[d.date() for d in kept["date"]],
        values=kept["value"].to_numpy(dtype=np.float64),
        n_dropped=n_dropped,
    )
