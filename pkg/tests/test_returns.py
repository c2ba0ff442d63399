import datetime
import math

import numpy as np
import pytest
from scipy import stats

from spillwatch.exceptions import DomainError, IngestionError
from spillwatch.marginals.returns import (
    PriceSeries,
    ReturnSeries,
    align,
    descriptive_stats,
    neg_log_returns,
    pearson,
)


def prices(values: list[float], name: str = "p") -> PriceSeries:
    dates = [datetime.date(2000 + i // 12, i % 12 + 1, 1) for i in range(len(values))]
    return PriceSeries(name=name, dates=dates, values=np.array(values, dtype=np.float64))


def test_neg_log_returns():
    r = neg_log_returns(prices([100.0, 90.0]))
    assert len(r) == 1
    assert r.values[0] == pytest.approx(0.105361, abs=1e-6)
    # Dated by the later price
    assert r.dates == [datetime.date(2000, 2, 1)]

    up = neg_log_returns(prices([90.0, 100.0, 100.0]))
    assert up.values[0] == pytest.approx(-math.log(100 / 90), rel=1e-14)
    assert up.values[1] == 0.0


def test_constant_prices_give_zero_returns():
    r = neg_log_returns(prices([1.2] * 10))
    np.testing.assert_array_equal(r.values, np.zeros(9))
    with pytest.raises(DomainError, match="constant"):
        descriptive_stats(r)


def test_neg_log_returns_rejects_bad_prices():
    with pytest.raises(IngestionError, match="at least 2"):
        neg_log_returns(prices([1.0]))
    with pytest.raises(IngestionError, match="positive"):
        neg_log_returns(prices([1.0, 0.0, 1.1]))
    with pytest.raises(IngestionError, match="positive"):
        neg_log_returns(prices([1.0, -2.0]))


def test_series_validation():
    with pytest.raises(ValueError, match="same length"):
        PriceSeries(name="p", dates=[datetime.date(2000, 1, 1)], values=np.array([1.0, 2.0]))
    with pytest.raises(ValueError, match="strictly increasing"):
        ReturnSeries(
            name="r",
            dates=[datetime.date(2000, 2, 1), datetime.date(2000, 1, 1)],
            values=np.array([0.1, 0.2]),
        )
    with pytest.raises(ValueError, match="finite"):
        ReturnSeries.from_values(np.array([0.1, math.nan]))


def test_descriptive_stats():
    rng = np.random.default_rng(0)
    values = rng.standard_t(5, size=500) * 0.02
    s = descriptive_stats(ReturnSeries.from_values(values))
    assert s.n_obs == 500
    assert s.mean == pytest.approx(values.mean(), rel=1e-12)
    assert s.std == pytest.approx(values.std(ddof=1), rel=1e-12)
    assert (s.min, s.max) == (values.min(), values.max())
    assert s.skewness == pytest.approx(stats.skew(values), rel=1e-12)
    assert s.excess_kurtosis == pytest.approx(stats.kurtosis(values), rel=1e-12)

    with pytest.raises(DomainError, match="at least 4"):
        descriptive_stats(ReturnSeries.from_values(np.array([0.1, 0.2, 0.3])))


def test_from_values_spans_long_simulations():
    r = ReturnSeries.from_values(np.zeros(5000))
    assert r.dates[0] == datetime.date(1999, 1, 1)
    assert r.dates[12] == datetime.date(2000, 1, 1)
    assert r.dates[-1].year > 2262


def test_align_and_pearson():
    rng = np.random.default_rng(1)
    x = ReturnSeries.from_values(rng.normal(size=60), name="x")
    # y starts 10 months later and runs 5 months longer
    y_values = 0.5 * x.values[10:] + rng.normal(size=50)
    y = ReturnSeries.from_values(
        np.concatenate([y_values, rng.normal(size=5)]), name="y", start="1999-11-01"
    )
    xa, ya = align(x, y)
    assert len(xa) == len(ya) == 50
    assert xa.dates == ya.dates
    assert xa.dates[0] == datetime.date(1999, 11, 1)
    np.testing.assert_array_equal(xa.values, x.values[10:])
    assert xa.name == "x" and ya.name == "y"

    assert pearson(x, y) == pytest.approx(stats.pearsonr(x.values[10:], y_values).statistic, rel=1e-12)
    assert pearson(x, x) == pytest.approx(1.0, abs=1e-12)


def test_pearson_needs_common_dates():
    x = ReturnSeries.from_values(np.array([0.1, 0.2, 0.3]), start="2000-01-01")
    y = ReturnSeries.from_values(np.array([0.1, 0.2, 0.3]), start="2010-01-01")
    with pytest.raises(DomainError, match="common dates"):
        pearson(x, y)
