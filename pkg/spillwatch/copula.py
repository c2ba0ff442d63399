"""Bivariate Student-t copula analytics.

The conditional CDF h(u) = P(V <= v | U = u) is the workhorse: the PELCoV
levels are its solutions of h(u) = v, and the copula CDF is its integral in u.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import integrate, special

from spillwatch.exceptions import DomainError
from spillwatch.tdist import (
    ArrayLike,
    FloatArray,
    as_output,
    check_probability,
    t_cdf_array,
    t_quantile_array,
)

logger = logging.getLogger(__name__)


class CopulaParams(BaseModel):
    """Correlation `rho` and degrees of freedom `n` of a bivariate t copula."""

    model_config = ConfigDict(frozen=True)

    rho: float
    n: float

    @field_validator("rho")
    @classmethod
    def _check_rho(cls, value: float) -> float:
        if not math.isfinite(value) or abs(value) >= 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {value}")
        return value

    @field_validator("n")
    @classmethod
    def _check_n(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 1.0:
            raise ValueError(f"n must be finite and > 1, got {value}")
        return value


class ConditionalCurve(BaseModel):
    """Shape summary of u -> h(u, v) for a fixed level v."""

    model_config = ConfigDict(frozen=True)

    params: CopulaParams
    v: float
    u_star: float | None
    L0: float
    L1: float


def h_from_quantiles(
    x: FloatArray, y: FloatArray, rho: float, n: float
) -> FloatArray:
    """h evaluated on t_n quantiles x = t_n^-1(u), y = t_n^-1(v) directly.

    Used by callers that scan many u values for several v and want to
    compute the quantiles once.
    """
    scale = np.hypot(x, math.sqrt(n)) * math.sqrt((1.0 - rho * rho) / (n + 1.0))
    return t_cdf_array((y - rho * x) / scale, n + 1.0)


def h(u: ArrayLike, v: ArrayLike, params: CopulaParams) -> ArrayLike:
    """Conditional CDF of V given U = u, i.e. the partial derivative dC(u, v)/du.

    Defined on the open square. Use `limits` for the values at u = 0 and u = 1.
    """
    ua = check_probability(u, "u")
    va = check_probability(v, "v")
    x = t_quantile_array(ua, params.n)
    y = t_quantile_array(va, params.n)
    return as_output(h_from_quantiles(x, y, params.rho, params.n))


def h_inverse(w: ArrayLike, u: ArrayLike, params: CopulaParams) -> ArrayLike:
    """Level v such that h(u, v) = w, the conditional quantile of V given U = u.

    h is strictly increasing in its second argument, and the inverse has a
    closed form: t_n(rho * x + s * t_{n+1}^-1(w)) with x = t_n^-1(u).
    """
    wa = check_probability(w, "w")
    ua = check_probability(u, "u")
    n, rho = params.n, params.rho
    x = t_quantile_array(ua, n)
    scale = np.hypot(x, math.sqrt(n)) * math.sqrt((1.0 - rho * rho) / (n + 1.0))
    return as_output(t_cdf_array(rho * x + scale * t_quantile_array(wa, n + 1.0), n))


def copula_cdf(u: float, v: float, params: CopulaParams) -> float:
    """C(u, v) on the closed unit square, as the integral of h over (0, u)."""
    for name, value in (("u", u), ("v", v)):
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {value}")
    if u == 0.0 or v == 0.0:
        return 0.0
    if u == 1.0:
        return v
    if v == 1.0:
        return u

    y = float(t_quantile_array(np.asarray(v), params.n))

    def integrand(s: float) -> float:
        x = t_quantile_array(np.asarray(s), params.n)
        return float(h_from_quantiles(x, np.asarray(y), params.rho, params.n))

    value, abserr = integrate.quad(
        integrand, 0.0, u, epsabs=1e-10 * min(u, v, 1.0), epsrel=1e-10, limit=200
    )
    logger.debug(f"copula_cdf({u}, {v}) = {value} (quadrature error {abserr:.2e})")
    # Fréchet bounds hold exactly; quadrature noise must not break them.
    return float(min(max(value, u + v - 1.0, 0.0), min(u, v)))


def copula_logpdf_from_quantiles(
    x: FloatArray, y: FloatArray, rho: ArrayLike, n: float
) -> FloatArray:
    """Copula log density at t_n quantiles; `rho` may vary element-wise."""
    rho_arr = np.asarray(rho, dtype=np.float64)
    one_minus = 1.0 - rho_arr * rho_arr
    log_norm = (
        special.gammaln(0.5 * (n + 2.0))
        + special.gammaln(0.5 * n)
        - 2.0 * special.gammaln(0.5 * (n + 1.0))
        - 0.5 * np.log(one_minus)
    )
    quad_form = (x * x - 2.0 * rho_arr * x * y + y * y) / (n * one_minus)
    return (
        log_norm
        - 0.5 * (n + 2.0) * np.log1p(quad_form)
        + 0.5 * (n + 1.0) * (np.log1p(x * x / n) + np.log1p(y * y / n))
    )


def copula_logpdf(u: ArrayLike, v: ArrayLike, params: CopulaParams) -> ArrayLike:
    ua = check_probability(u, "u")
    va = check_probability(v, "v")
    x = t_quantile_array(ua, params.n)
    y = t_quantile_array(va, params.n)
    return as_output(copula_logpdf_from_quantiles(x, y, params.rho, params.n))


def copula_pdf(u: ArrayLike, v: ArrayLike, params: CopulaParams) -> ArrayLike:
    """Copula density: bivariate t density over the product of its margins."""
    return as_output(np.exp(np.asarray(copula_logpdf(u, v, params))))


def u_star(v: float, params: CopulaParams) -> float | None:
    """Critical point of u -> h(u, v), or None at v = 1/2 where h is monotone.

    For rho > 0 it is a maximum when v > 1/2 (and lies below 1/2) and a
    minimum when v < 1/2 (and lies above 1/2).
    """
    check_probability(v, "v")
    if v == 0.5:
        return None
    y = float(t_quantile_array(np.asarray(v), params.n))
    if y == 0.0:
        return None
    return float(t_cdf_array(np.asarray(-params.rho * params.n / y), params.n))


def limits(params: CopulaParams, v: float | None = None) -> tuple[float, float]:
    """Limits (L0, L1) of h(u, v) as u -> 0 and u -> 1.

    They don't depend on v; it is accepted only to validate it.
    """
    if v is not None:
        check_probability(v, "v")
    n, rho = params.n, params.rho
    L0 = float(t_cdf_array(np.asarray(rho * math.sqrt(n + 1.0) / math.sqrt(1.0 - rho * rho)), n + 1.0))
    return L0, 1.0 - L0


def conditional_curve(v: float, params: CopulaParams) -> ConditionalCurve:
    L0, L1 = limits(params, v)
    return ConditionalCurve(params=params, v=v, u_star=u_star(v, params), L0=L0, L1=L1)


def tail_dependence(params: CopulaParams) -> float:
    """Lower (equal to upper) tail dependence coefficient of the t copula."""
    n, rho = params.n, params.rho
    arg = -math.sqrt((n + 1.0) * (1.0 - rho) / (1.0 + rho))
    return 2.0 * float(t_cdf_array(np.asarray(arg), n + 1.0))
