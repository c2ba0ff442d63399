"""Student-t family: CDF, quantile, density, and the Fernández-Steel skew-t.

Every function accepts a float or a numpy array and returns the same kind.
The t CDF goes through the regularized incomplete beta function; the quantile
inverts the same relation and polishes the result with Newton steps.
"""

import logging
import math

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import optimize, special

from spillwatch.constants import UMAX, UMIN
from spillwatch.exceptions import DomainError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ArrayLike = float | FloatArray

NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-14


def as_output(arr: FloatArray) -> ArrayLike:
    if arr.ndim == 0:
        return float(arr)
    return arr


def check_df(n: float, name: str = "n", minimum: float = 0.0) -> float:
    """Validate degrees of freedom: finite and strictly above `minimum`."""
    n = float(n)
    if not math.isfinite(n) or n <= minimum:
        raise DomainError(f"{name} must be finite and > {minimum}, got {n}")
    return n


def check_finite(x: ArrayLike, name: str = "x") -> FloatArray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def check_probability(p: ArrayLike, name: str = "p") -> FloatArray:
    """Validate that every element lies in the open interval (0, 1)."""
    arr = np.asarray(p, dtype=np.float64)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"{name} must lie in (0, 1)")
    return arr


# ========================================
# Symmetric Student-t
# ========================================


def t_cdf_array(x: FloatArray, n: float) -> FloatArray:
    x2 = x * x
    with np.errstate(divide="ignore", invalid="ignore"):
        # P(0 < T < |x|), accurate near the center
        central = 0.5 * special.betainc(0.5, 0.5 * n, x2 / (n + x2))
        # P(T > |x|), accurate in the tails
        tail = 0.5 * special.betainc(0.5 * n, 0.5, n / (n + x2))
    upper = np.where(x2 < n, 0.5 - central, tail)
    return np.where(x < 0, upper, 1.0 - upper)


def t_logpdf_array(x: FloatArray, n: float) -> FloatArray:
    log_norm = (
        special.gammaln(0.5 * (n + 1))
        - special.gammaln(0.5 * n)
        - 0.5 * math.log(n * math.pi)
    )
    return log_norm - 0.5 * (n + 1) * np.log1p(x * x / n)


def t_cdf(x: ArrayLike, n: float) -> ArrayLike:
    """CDF of the Student-t distribution with `n` degrees of freedom."""
    n = check_df(n)
    return as_output(t_cdf_array(check_finite(x), n))


def t_pdf(x: ArrayLike, n: float) -> ArrayLike:
    n = check_df(n)
    return as_output(np.exp(t_logpdf_array(check_finite(x), n)))


def t_logpdf(x: ArrayLike, n: float) -> ArrayLike:
    n = check_df(n)
    return as_output(t_logpdf_array(check_finite(x), n))


def _t_quantile_seed(p: FloatArray, n: float) -> FloatArray:
    lower = np.minimum(p, 1.0 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        # Tail branch: z = n / (n + q^2)
        z = special.betaincinv(0.5 * n, 0.5, 2.0 * lower)
        q_tail = np.sqrt(n * (1.0 - z) / z)
        # Central branch: w = q^2 / (n + q^2)
        w = special.betaincinv(0.5, 0.5 * n, np.abs(2.0 * p - 1.0))
        q_central = np.sqrt(n * w / (1.0 - w))
    magnitude = np.where(np.abs(p - 0.5) < 0.25, q_central, q_tail)
    return np.where(p < 0.5, -magnitude, magnitude)


def _bracketed_quantile(p: float, n: float) -> float:
    lo, hi = -1.0, 1.0
    while t_cdf_array(np.asarray(lo), n) > p:
        lo *= 2.0
    while t_cdf_array(np.asarray(hi), n) < p:
        hi *= 2.0
    return float(
        optimize.brentq(
            lambda q: float(t_cdf_array(np.asarray(q), n)) - p, lo, hi, xtol=1e-15
        )
    )


def t_quantile_array(p: FloatArray, n: float) -> FloatArray:
    q = np.atleast_1d(_t_quantile_seed(p, n)).astype(np.float64)
    target = np.atleast_1d(p)
    active = np.isfinite(q)

    for _ in range(NEWTON_MAX_ITER):
        if not active.any():
            break
        resid = t_cdf_array(q[active], n) - target[active]
        done = np.abs(resid) <= NEWTON_TOL
        step = resid / np.exp(t_logpdf_array(q[active], n))
        updated = q[active] - np.where(done, 0.0, step)
        q[active] = updated
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        active[idx[~np.isfinite(updated)]] = False

    bad = ~np.isfinite(q) | (np.abs(t_cdf_array(np.where(np.isfinite(q), q, 0.0), n) - target) > 1e-12)
    if bad.any():
        logger.debug(f"t quantile: bisection fallback for {int(bad.sum())} value(s)")
        for i in np.flatnonzero(bad):
            q[i] = _bracketed_quantile(float(target[i]), n)

    return q.reshape(np.shape(p))


def t_quantile(p: ArrayLike, n: float) -> ArrayLike:
    """Inverse CDF of the Student-t distribution with `n` degrees of freedom."""
    n = check_df(n)
    return as_output(t_quantile_array(check_probability(p), n))


# ========================================
# Unit-variance Student-t (GARCH innovations)
# ========================================


def _std_scale(m: float) -> float:
    m = check_df(m, "m", minimum=2.0)
    return math.sqrt((m - 2.0) / m)


def std_t_logpdf(z: ArrayLike, m: float) -> ArrayLike:
    """Log density of a Student-t rescaled to unit variance (requires m > 2)."""
    k = _std_scale(m)
    return as_output(t_logpdf_array(check_finite(z) / k, m) - math.log(k))


def std_t_pdf(z: ArrayLike, m: float) -> ArrayLike:
    return as_output(np.exp(np.asarray(std_t_logpdf(z, m))))


def std_t_cdf(z: ArrayLike, m: float) -> ArrayLike:
    k = _std_scale(m)
    return as_output(t_cdf_array(check_finite(z) / k, m))


def std_t_quantile(p: ArrayLike, m: float) -> ArrayLike:
    k = _std_scale(m)
    return as_output(k * t_quantile_array(check_probability(p), m))


# ========================================
# Fernández-Steel skew-t
# ========================================


class SkewTParams(BaseModel):
    """Degrees of freedom `m` and skewness `xi` of a Fernández-Steel skew-t.

    xi = 1 is the symmetric t. The standardized (zero-mean, unit-variance)
    variant additionally needs m > 2.
    """

    model_config = ConfigDict(frozen=True)

    m: float
    xi: float

    @field_validator("m", "xi")
    @classmethod
    def _positive_finite(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"must be finite and positive, got {value}")
        return value


def skew_t_moments(params: SkewTParams) -> tuple[float, float]:
    """Mean and standard deviation of the unstandardized skew-t (requires m > 2)."""
    m = check_df(params.m, "m", minimum=2.0)
    xi = params.xi
    abs_mean = (
        2.0
        * math.sqrt(m)
        * math.exp(special.gammaln(0.5 * (m + 1)) - special.gammaln(0.5 * m))
        / ((m - 1.0) * math.sqrt(math.pi))
    )
    mean = abs_mean * (xi - 1.0 / xi)
    second = m / (m - 2.0) * (xi**2 - 1.0 + xi**-2)
    return mean, math.sqrt(second - mean**2)


def _skew_raw_logpdf(x: FloatArray, m: float, xi: float) -> FloatArray:
    arg = np.where(x < 0, x * xi, x / xi)
    return math.log(2.0 / (xi + 1.0 / xi)) + t_logpdf_array(arg, m)


def _skew_raw_cdf(x: FloatArray, m: float, xi: float) -> FloatArray:
    xi2 = xi * xi
    left = 2.0 / (1.0 + xi2) * t_cdf_array(xi * x, m)
    right = 1.0 - 2.0 * xi2 / (1.0 + xi2) * t_cdf_array(-x / xi, m)
    return np.where(x < 0, left, right)


def _skew_raw_quantile(p: FloatArray, m: float, xi: float) -> FloatArray:
    xi2 = xi * xi
    split = 1.0 / (1.0 + xi2)
    # Each branch only sees probabilities that are valid for it.
    left_p = np.clip(p * (1.0 + xi2) / 2.0, UMIN * 1e-200, 0.5)
    right_p = np.clip((1.0 - p) * (1.0 + xi2) / (2.0 * xi2), UMIN * 1e-200, 0.5)
    left = t_quantile_array(left_p, m) / xi
    right = -xi * t_quantile_array(right_p, m)
    return np.where(p < split, left, right)


def _location_scale(params: SkewTParams, standardized: bool) -> tuple[float, float]:
    if not standardized:
        return 0.0, 1.0
    if params.m <= 2.0:
        raise DomainError(
            f"standardized skew-t needs m > 2 for a finite variance, got m={params.m}"
        )
    return skew_t_moments(params)


def skew_t_logpdf(
    x: ArrayLike, params: SkewTParams, standardized: bool = False
) -> ArrayLike:
    mu, sigma = _location_scale(params, standardized)
    xa = check_finite(x)
    return as_output(math.log(sigma) + _skew_raw_logpdf(mu + sigma * xa, params.m, params.xi))


def skew_t_pdf(x: ArrayLike, params: SkewTParams, standardized: bool = False) -> ArrayLike:
    """Density g of the skew-t; `standardized` shifts it to mean 0, variance 1."""
    return as_output(np.exp(np.asarray(skew_t_logpdf(x, params, standardized))))


def skew_t_cdf(x: ArrayLike, params: SkewTParams, standardized: bool = False) -> ArrayLike:
    mu, sigma = _location_scale(params, standardized)
    xa = check_finite(x)
    return as_output(_skew_raw_cdf(mu + sigma * xa, params.m, params.xi))


def skew_t_quantile(
    p: ArrayLike, params: SkewTParams, standardized: bool = False
) -> ArrayLike:
    mu, sigma = _location_scale(params, standardized)
    raw = _skew_raw_quantile(check_probability(p), params.m, params.xi)
    return as_output((raw - mu) / sigma)


def skew_t_rvs(
    params: SkewTParams,
    size: int,
    rng: np.random.Generator,
    standardized: bool = True,
) -> FloatArray:
    """Draw skew-t variates by inverse transform sampling."""
    u = np.clip(rng.random(size), UMIN, UMAX)
    return np.asarray(skew_t_quantile(u, params, standardized), dtype=np.float64)
