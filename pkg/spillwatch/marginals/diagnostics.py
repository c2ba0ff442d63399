"""Residual diagnostics for the fitted marginal models."""

import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats
from statsmodels.stats.diagnostic import acorr_ljungbox

from spillwatch.constants import LJUNG_BOX_LAGS
from spillwatch.exceptions import DomainError
from spillwatch.marginals.garch import FilteredState, pit
from spillwatch.tdist import ArrayLike, FloatArray

logger = logging.getLogger(__name__)


class ResidualDiagnostics(BaseModel):
    """p-values of the residual checks for one marginal model."""

    model_config = ConfigDict(frozen=True)

    ljung_box_squared: float
    ljung_box: float
    jarque_bera: float
    ks_uniformity: float


def ljung_box(series: ArrayLike, lags: int = LJUNG_BOX_LAGS) -> float:
    """p-value of the Ljung-Box Q statistic with `lags` lags."""
    values = np.asarray(series, dtype=np.float64)
    if lags < 1:
        raise DomainError(f"lags must be positive, got {lags}")
    if len(values) <= lags:
        raise DomainError(f"need more than {lags} observations, got {len(values)}")
    result = acorr_ljungbox(values, lags=[lags], return_df=True)
    return float(result["lb_pvalue"].iloc[0])


def jarque_bera(series: ArrayLike) -> float:
    """p-value of the Jarque-Bera normality test."""
    values = np.asarray(series, dtype=np.float64)
    if len(values) < 8:
        raise DomainError(f"need at least 8 observations, got {len(values)}")
    return float(stats.jarque_bera(values).pvalue)


def ks_uniformity(u: ArrayLike) -> float:
    """p-value of the Kolmogorov-Smirnov test against U(0, 1)."""
    return float(stats.kstest(np.asarray(u, dtype=np.float64), "uniform").pvalue)


def diagnose(
    state: FilteredState,
    innovation_cdf: Callable[[FloatArray], ArrayLike],
    lags: int = LJUNG_BOX_LAGS,
) -> ResidualDiagnostics:
    z = state.std_residuals
    result = ResidualDiagnostics(
        ljung_box_squared=ljung_box(z**2, lags),
        ljung_box=ljung_box(z, lags),
        jarque_bera=jarque_bera(z),
        ks_uniformity=ks_uniformity(pit(state, innovation_cdf)),
    )
    logger.info(f"Residual diagnostics: {result.model_dump()}")
    return result
