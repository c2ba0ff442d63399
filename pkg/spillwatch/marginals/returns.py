import datetime
import logging
import math

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import stats

from spillwatch.exceptions import DomainError, IngestionError

logger = logging.getLogger(__name__)


def _check_dates(dates: list[datetime.date]) -> None:
    for previous, current in zip(dates, dates[1:], strict=False):
        if current <= previous:
            raise ValueError(f"dates must be strictly increasing, {current} follows {previous}")


class PriceSeries(BaseModel):
    """Observed prices (levels) of one series, in date order."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    dates: list[datetime.date]
    values: np.ndarray
    # Rows skipped during ingestion because the value was missing
    n_dropped: int = 0

    @model_validator(mode="after")
    def _check(self) -> "PriceSeries":
        if len(self.dates) != len(self.values):
            raise ValueError("dates and values must have the same length")
        _check_dates(self.dates)
        return self

    def __len__(self) -> int:
        return len(self.values)


class ReturnSeries(BaseModel):
    """Negative log returns, dated by the later of the two prices."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    dates: list[datetime.date]
    values: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "ReturnSeries":
        if len(self.dates) != len(self.values):
            raise ValueError("dates and values must have the same length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("return values must be finite")
        _check_dates(self.dates)
        return self

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_values(
        cls, values: np.ndarray, name: str = "simulated", start: str = "1999-01-01"
    ) -> "ReturnSeries":
        """Wrap raw values with consecutive month-start dates."""
        # Periods, unlike timestamps, reach past 2262 for long simulations
        months = pd.period_range(start=start, periods=len(values), freq="M")
        return cls(
            name=name,
            dates=[datetime.date(p.year, p.month, 1) for p in months],
            values=np.asarray(values, dtype=np.float64),
        )

    def to_pandas(self) -> pd.Series:
        return pd.Series(self.values, index=pd.DatetimeIndex(self.dates), name=self.name)


class DescriptiveStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_obs: int
    mean: float
    std: float
    min: float
    max: float
    skewness: float
    excess_kurtosis: float


def neg_log_returns(prices: PriceSeries) -> ReturnSeries:
    """r_t = log(p_{t-1} / p_t), so a falling price gives a positive loss."""
    if len(prices) < 2:
        raise IngestionError(f"need at least 2 prices for returns, got {len(prices)}")
    bad = np.flatnonzero(~(prices.values > 0))
    if bad.size:
        i = int(bad[0])
        raise IngestionError(
            f"price must be positive, got {prices.values[i]} on {prices.dates[i]} in {prices.name}"
        )
    values = np.log(prices.values[:-1] / prices.values[1:])
    return ReturnSeries(name=prices.name, dates=prices.dates[1:], values=values)


def descriptive_stats(r: ReturnSeries) -> DescriptiveStats:
    """Mean, sample standard deviation, range, skewness and excess kurtosis."""
    if len(r) < 4:
        raise DomainError(f"need at least 4 returns, got {len(r)}")
    std = float(np.std(r.values, ddof=1))
    if std == 0.0 or not math.isfinite(std):
        raise DomainError("series is constant, skewness and kurtosis are undefined")
    return DescriptiveStats(
        n_obs=len(r),
        mean=float(np.mean(r.values)),
        std=std,
        min=float(np.min(r.values)),
        max=float(np.max(r.values)),
        skewness=float(stats.skew(r.values, bias=True)),
        excess_kurtosis=float(stats.kurtosis(r.values, fisher=True, bias=True)),
    )


def align(x: ReturnSeries, y: ReturnSeries) -> tuple[ReturnSeries, ReturnSeries]:
    """Inner-join two series on their dates."""
    joined = pd.concat([x.to_pandas(), y.to_pandas()], axis=1, join="inner", keys=["x", "y"])
    dates = [d.date() for d in joined.index]
    if len(joined) < len(x) or len(joined) < len(y):
        logger.info(
            f"Aligned {x.name} ({len(x)}) and {y.name} ({len(y)}) on {len(joined)} common dates"
        )
    return (
        ReturnSeries(name=x.name, dates=dates, values=joined["x"].to_numpy(dtype=np.float64)),
        ReturnSeries(name=y.name, dates=dates, values=joined["y"].to_numpy(dtype=np.float64)),
    )


def pearson(x: ReturnSeries, y: ReturnSeries) -> float:
    """Pearson correlation over the dates both series share."""
    xa, ya = align(x, y)
    if len(xa) < 3:
        raise DomainError(f"need at least 3 common dates, got {len(xa)}")
    return float(stats.pearsonr(xa.values, ya.values).statistic)
