"""Static and time-varying Student-t copula estimation.

The dynamic correlation follows

    rho_t = lambda1(nu0 + nu1 rho_{t-1} + nu2 * mean_{j=1..10} x_{t-j} y_{t-j})

with x, y the t_n quantiles of the pseudo-observations and lambda1 a logistic
map onto (-1, 1). The degrees of freedom stay fixed at the static estimate.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import stats

from spillwatch.constants import MIN_FIT_LENGTH, N_STARTS, RHO_MAX, SEED, UMAX, UMIN
from spillwatch.copula import CopulaParams, copula_logpdf_from_quantiles
from spillwatch.exceptions import BoundaryError, DomainError, FittingError
from spillwatch.marginals.garch import (
    ArGarchParams,
    MaGarchSkewParams,
    ar_garch_from_theta,
    ar_garch_names,
    ar_garch_to_theta,
    filter_ar_garch,
    filter_ma_garch_skew,
    ma_garch_from_theta,
    ma_garch_names,
    ma_garch_to_theta,
    pit,
)
from spillwatch.marginals.returns import ReturnSeries
from spillwatch.mle import PENALTY, maximize, std_errors
from spillwatch.tdist import FloatArray, t_cdf_array, t_quantile_array

logger = logging.getLogger(__name__)

N_LAGS = 10
# Static fits beyond these are reported as boundary solutions
BOUNDARY_RHO = 0.999
BOUNDARY_DF = 1.01


class EvolutionParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    nu0: float
    nu1: float
    nu2: float
    n: float
    rho_init: float

    @field_validator("nu0", "nu1", "nu2")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"must be finite, got {value}")
        return value

    @field_validator("n")
    @classmethod
    def _check_n(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 1.0:
            raise ValueError(f"n must be finite and > 1, got {value}")
        return value

    @field_validator("rho_init")
    @classmethod
    def _check_rho(cls, value: float) -> float:
        if not abs(value) < 1.0:
            raise ValueError(f"rho_init must lie in (-1, 1), got {value}")
        return value


class RhoPath(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: np.ndarray
    L0: np.ndarray


class StaticCopulaFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: CopulaParams
    loglik: float
    std_errors: dict[str, float]


class DynamicCopulaFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: EvolutionParams
    loglik: float
    std_errors: dict[str, float]
    trace: list[float]


class SimulatedCopulaPath(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    u: np.ndarray
    v: np.ndarray
    rho: np.ndarray


def lambda1(x: float) -> float:
    """(1 - e^-x) / (1 + e^-x), written as tanh(x / 2) so it can't overflow."""
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    return math.tanh(0.5 * x)


def _check_pseudo_obs(u: FloatArray, v: FloatArray, minimum: int = 1) -> tuple[FloatArray, FloatArray]:
    ua = np.asarray(u, dtype=np.float64)
    va = np.asarray(v, dtype=np.float64)
    if ua.shape != va.shape or ua.ndim != 1:
        raise DomainError("pseudo-observations must be two 1-d arrays of equal length")
    if len(ua) < minimum:
        raise DomainError(f"need at least {minimum} pseudo-observation pairs, got {len(ua)}")
    if not (np.all((ua > 0) & (ua < 1)) and np.all((va > 0) & (va < 1))):
        raise DomainError("pseudo-observations must lie strictly inside (0, 1)")
    return ua, va


def _lag_means(x: FloatArray, y: FloatArray) -> FloatArray:
    """Mean of x_{t-j} y_{t-j} over the (up to 10) lags available at each t."""
    csum = np.concatenate([[0.0], np.cumsum(x * y)])
    t = np.arange(len(x))
    lo = np.maximum(t - N_LAGS, 0)
    count = t - lo
    out = np.zeros(len(x))
    has_lags = count > 0
    out[has_lags] = (csum[t[has_lags]] - csum[lo[has_lags]]) / count[has_lags]
    return out


def _rho_recursion(lag_means: FloatArray, nu0: float, nu1: float, nu2: float, rho_init: float) -> FloatArray:
    rho = np.empty(len(lag_means))
    previous = rho_init
    for t, lag_mean in enumerate(lag_means.tolist()):
        previous = math.tanh(0.5 * (nu0 + nu1 * previous + nu2 * lag_mean))
        previous = min(max(previous, -RHO_MAX), RHO_MAX)
        rho[t] = previous
    return rho


def boundary_L0(rho: FloatArray, n: float) -> FloatArray:
    """L0 = t_{n+1}(rho sqrt(n+1) / sqrt(1 - rho^2)), element-wise."""
    return t_cdf_array(rho * math.sqrt(n + 1.0) / np.sqrt(1.0 - rho * rho), n + 1.0)


def rho_path(ev: EvolutionParams, u: FloatArray, v: FloatArray) -> RhoPath:
    """Correlation path driven by the pseudo-observations, with its L0 limits."""
    ua, va = _check_pseudo_obs(u, v)
    x = t_quantile_array(ua, ev.n)
    y = t_quantile_array(va, ev.n)
    rho = _rho_recursion(_lag_means(x, y), ev.nu0, ev.nu1, ev.nu2, ev.rho_init)
    return RhoPath(rho=rho, L0=boundary_L0(rho, ev.n))


def copula_loglik_path(rho: FloatArray, u: FloatArray, v: FloatArray, n: float) -> FloatArray:
    """Per-date copula log density under a correlation path."""
    ua, va = _check_pseudo_obs(u, v)
    x = t_quantile_array(ua, n)
    y = t_quantile_array(va, n)
    return copula_logpdf_from_quantiles(x, y, rho, n)


# ========================================
# Static fit
# ========================================


def kendall_rho(u: FloatArray, v: FloatArray) -> float:
    """Correlation implied by Kendall's tau for an elliptical copula."""
    tau = float(stats.kendalltau(u, v).statistic)
    return math.sin(0.5 * math.pi * tau)


def static_fit(
    u: FloatArray, v: FloatArray, n_starts: int = N_STARTS, seed: int = SEED
) -> StaticCopulaFit:
    """Maximum likelihood over (rho, n) with rho = tanh(a), n = 1 + exp(b).

    Raises:
        BoundaryError: If the estimate runs into |rho| -> 1 or n -> 1.
    """
    ua, va = _check_pseudo_obs(u, v, minimum=MIN_FIT_LENGTH)
    names = ["rho", "n"]

    def natural(theta: FloatArray) -> FloatArray:
        return np.array([math.tanh(theta[0]), 1.0 + math.exp(theta[1])])

    def negloglik(theta: FloatArray) -> float:
        rho, n = natural(theta)
        with np.errstate(all="ignore"):
            x = t_quantile_array(ua, n)
            y = t_quantile_array(va, n)
            value = -float(np.sum(copula_logpdf_from_quantiles(x, y, rho, n)))
        return value if math.isfinite(value) else PENALTY

    rho0 = float(np.clip(kendall_rho(ua, va), -0.95, 0.95))
    base = np.array([math.atanh(rho0), math.log(7.0)])
    bounds = [(-7.6, 7.6), (math.log(0.005), math.log(200.0))]

    def check_boundary(rho: float, n: float, loglik: float | None) -> None:
        if abs(rho) > BOUNDARY_RHO or n < BOUNDARY_DF:
            raise BoundaryError(
                f"Static copula fit hit the boundary: rho={rho:.6f}, n={n:.4f}",
                best_params={"rho": rho, "n": n},
                best_loglik=loglik,
            )

    try:
        fit = maximize(negloglik, base, bounds, "static copula", names, natural, n_starts, seed)
    except FittingError as e:
        if e.best_params is not None:
            check_boundary(e.best_params["rho"], e.best_params["n"], e.best_loglik)
        raise

    rho, n = natural(fit.theta)
    check_boundary(float(rho), float(n), fit.loglik)
    params = CopulaParams(rho=float(rho), n=float(n))
    errors = std_errors(negloglik, fit.theta, natural, names, "static copula")
    logger.info(f"Static copula fit: rho={params.rho:.4f}, n={params.n:.4f}, loglik={fit.loglik:.4f}")
    return StaticCopulaFit(params=params, loglik=fit.loglik, std_errors=errors)


# ========================================
# Dynamic fit
# ========================================


def fit_dynamic(
    u: FloatArray,
    v: FloatArray,
    n: float,
    rho_init: float,
    n_starts: int = N_STARTS,
    seed: int = SEED,
) -> DynamicCopulaFit:
    """Maximize the copula likelihood over (nu0, nu1, nu2) with n held fixed.

    The base start is the constant path at `rho_init` (nu1 = nu2 = 0).
    """
    ua, va = _check_pseudo_obs(u, v, minimum=N_LAGS + 1)
    x = t_quantile_array(ua, n)
    y = t_quantile_array(va, n)
    lag_means = _lag_means(x, y)
    names = ["nu0", "nu1", "nu2"]

    def negloglik(theta: FloatArray) -> float:
        rho = _rho_recursion(lag_means, theta[0], theta[1], theta[2], rho_init)
        with np.errstate(all="ignore"):
            value = -float(np.sum(copula_logpdf_from_quantiles(x, y, rho, n)))
        return value if math.isfinite(value) else PENALTY

    def natural(theta: FloatArray) -> FloatArray:
        return np.asarray(theta, dtype=np.float64)

    base = np.array([2.0 * math.atanh(rho_init), 0.0, 0.0])
    bounds = [(-20.0, 20.0), (-10.0, 10.0), (-10.0, 10.0)]
    fit = maximize(negloglik, base, bounds, "dynamic copula", names, natural, n_starts, seed)

    nu0, nu1, nu2 = (float(t) for t in fit.theta)
    params = EvolutionParams(nu0=nu0, nu1=nu1, nu2=nu2, n=n, rho_init=rho_init)
    errors = std_errors(negloglik, fit.theta, natural, names, "dynamic copula")
    logger.info(f"Dynamic copula fit: {params.model_dump()}, loglik={fit.loglik:.4f}")
    return DynamicCopulaFit(params=params, loglik=fit.loglik, std_errors=errors, trace=fit.trace)


def simulate_dynamic(ev: EvolutionParams, size: int, seed: int) -> SimulatedCopulaPath:
    """Draw pseudo-observations whose correlation follows the dynamic recursion."""
    if size < 1:
        raise DomainError(f"size must be at least 1, got {size}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((size, 2))
    scale = np.sqrt(rng.chisquare(df=ev.n, size=size) / ev.n)
    x = z[:, 0] / scale

    y = np.empty(size)
    rho = np.empty(size)
    products: list[float] = []
    previous = ev.rho_init
    for t in range(size):
        window = products[-N_LAGS:]
        lag_mean = sum(window) / len(window) if window else 0.0
        previous = min(max(lambda1(ev.nu0 + ev.nu1 * previous + ev.nu2 * lag_mean), -RHO_MAX), RHO_MAX)
        rho[t] = previous
        y[t] = (previous * z[t, 0] + math.sqrt(1.0 - previous * previous) * z[t, 1]) / scale[t]
        products.append(float(x[t] * y[t]))

    u_out = np.clip(t_cdf_array(x, ev.n), UMIN, UMAX)
    v_out = np.clip(t_cdf_array(y, ev.n), UMIN, UMAX)
    return SimulatedCopulaPath(u=u_out, v=v_out, rho=rho)


# ========================================
# One-step (joint) likelihood
# ========================================


class JointFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_params: ArGarchParams
    y_params: MaGarchSkewParams
    evolution: EvolutionParams
    loglik: float
    std_errors: dict[str, float]


def fit_joint(
    x: ReturnSeries,
    y: ReturnSeries,
    x_start: ArGarchParams,
    y_start: MaGarchSkewParams,
    evolution_start: EvolutionParams,
    n_starts: int = 1,
    seed: int = SEED,
) -> JointFit:
    """Maximize the full log-likelihood over marginal and copula parameters at once.

    The sum over dates of log f_t(x_t) + log g_t(y_t) + log c_t(u_t, v_t) is
    optimized from the two-stage estimates; n and rho_init stay fixed.
    """
    if len(x) != len(y) or x.dates != y.dates:
        raise DomainError("joint fit needs two series on the same dates")
    n, rho_init = evolution_start.n, evolution_start.rho_init
    k_x = len(ar_garch_names())
    k_y = len(ma_garch_names())
    names = (
        [f"x.{name}" for name in ar_garch_names()]
        + [f"y.{name}" for name in ma_garch_names()]
        + ["nu0", "nu1", "nu2"]
    )

    def unpack(theta: FloatArray) -> tuple[ArGarchParams, MaGarchSkewParams, FloatArray]:
        return (
            ar_garch_from_theta(theta[:k_x]),
            ma_garch_from_theta(theta[k_x : k_x + k_y]),
            theta[k_x + k_y :],
        )

    def negloglik(theta: FloatArray) -> float:
        try:
            xp, yp, nu = unpack(theta)
        except ValueError:
            return PENALTY
        with np.errstate(all="ignore"):
            x_state = filter_ar_garch(xp, x)
            y_state = filter_ma_garch_skew(yp, y)
            qu = t_quantile_array(pit(x_state, xp.innovation_cdf), n)
            qv = t_quantile_array(pit(y_state, yp.innovation_cdf), n)
            rho = _rho_recursion(_lag_means(qu, qv), nu[0], nu[1], nu[2], rho_init)
            value = -(
                x_state.loglik
                + y_state.loglik
                + float(np.sum(copula_logpdf_from_quantiles(qu, qv, rho, n)))
            )
        return value if math.isfinite(value) else PENALTY

    def natural(theta: FloatArray) -> FloatArray:
        xp, yp, nu = unpack(theta)
        return np.concatenate(
            [
                [xp.phi1, xp.omega, xp.alpha, xp.beta, xp.m1],
                [yp.theta1, yp.omega, yp.alpha, yp.beta, yp.skew.m, yp.skew.xi],
                nu,
            ]
        )

    base = np.concatenate(
        [
            ar_garch_to_theta(x_start),
            ma_garch_to_theta(y_start),
            [evolution_start.nu0, evolution_start.nu1, evolution_start.nu2],
        ]
    )
    lower = base - 3.0
    upper = base + 3.0
    bounds = list(zip(lower.tolist(), upper.tolist(), strict=True))
    fit = maximize(negloglik, base, bounds, "joint", names, natural, n_starts, seed)

    xp, yp, nu = unpack(fit.theta)
    evolution = EvolutionParams(
        nu0=float(nu[0]), nu1=float(nu[1]), nu2=float(nu[2]), n=n, rho_init=rho_init
    )
    errors = std_errors(negloglik, fit.theta, natural, names, "joint")
    logger.info(f"Joint fit: loglik={fit.loglik:.4f}, evolution={evolution.model_dump()}")
    return JointFit(
        x_params=xp, y_params=yp, evolution=evolution, loglik=fit.loglik, std_errors=errors
    )
