"""AR(1) and MA(1) mean equations with GARCH(1,1) variance, fitted by maximum likelihood.

X_t = phi1 X_{t-1} + eps_t,             eps_t = sigma_t z_t, z_t ~ unit-variance t(m1)
Y_t = eta_t + theta1 eta_{t-1},         eta_t = sigma_t z_t, z_t ~ standardized skew-t(m2, xi)
sigma_t^2 = omega + alpha e_{t-1}^2 + beta sigma_{t-1}^2

Pre-sample values of the series and of the innovations are 0, and the first
conditional variance is the sample variance of the series. Both recursions
are linear filters, so they run through `scipy.signal.lfilter`.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import signal, special

from spillwatch.constants import MIN_FIT_LENGTH, N_STARTS, SEED, UMAX, UMIN
from spillwatch.exceptions import DomainError
from spillwatch.marginals.returns import ReturnSeries
from spillwatch.mle import PENALTY, maximize, std_errors
from spillwatch.tdist import (
    ArrayLike,
    FloatArray,
    SkewTParams,
    skew_t_cdf,
    skew_t_logpdf,
    skew_t_quantile,
    skew_t_rvs,
    std_t_cdf,
    std_t_logpdf,
    std_t_quantile,
)

logger = logging.getLogger(__name__)

# Degrees of freedom stay above this so the innovation variance is finite
MIN_INNOVATION_DF = 2.05


class ArGarchParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    phi1: float
    omega: float
    alpha: float
    beta: float
    m1: float

    @model_validator(mode="after")
    def _check(self) -> "ArGarchParams":
        _check_garch(self.omega, self.alpha, self.beta)
        if not abs(self.phi1) < 1:
            raise ValueError(f"|phi1| must be < 1, got {self.phi1}")
        if not self.m1 > 2:
            raise ValueError(f"m1 must be > 2 for unit-variance innovations, got {self.m1}")
        return self

    def innovation_logpdf(self, z: ArrayLike) -> ArrayLike:
        return std_t_logpdf(z, self.m1)

    def innovation_cdf(self, z: ArrayLike) -> ArrayLike:
        return std_t_cdf(z, self.m1)

    def innovation_quantile(self, p: ArrayLike) -> ArrayLike:
        return std_t_quantile(p, self.m1)


class MaGarchSkewParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta1: float
    omega: float
    alpha: float
    beta: float
    skew: SkewTParams

    @model_validator(mode="after")
    def _check(self) -> "MaGarchSkewParams":
        _check_garch(self.omega, self.alpha, self.beta)
        if not abs(self.theta1) < 1:
            raise ValueError(f"|theta1| must be < 1 for invertibility, got {self.theta1}")
        if not self.skew.m > 2:
            raise ValueError(f"m2 must be > 2 for unit-variance innovations, got {self.skew.m}")
        return self

    def innovation_logpdf(self, z: ArrayLike) -> ArrayLike:
        return skew_t_logpdf(z, self.skew, standardized=True)

    def innovation_cdf(self, z: ArrayLike) -> ArrayLike:
        return skew_t_cdf(z, self.skew, standardized=True)

    def innovation_quantile(self, p: ArrayLike) -> ArrayLike:
        return skew_t_quantile(p, self.skew, standardized=True)


def _check_garch(omega: float, alpha: float, beta: float) -> None:
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    if not (alpha >= 0 and beta >= 0):
        raise ValueError(f"alpha and beta must be >= 0, got {alpha}, {beta}")
    if not alpha + beta < 1:
        raise ValueError(f"alpha + beta must be < 1, got {alpha + beta}")


class FilteredState(BaseModel):
    """Conditional moments and residuals of a marginal model on one series."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cond_mean: np.ndarray
    cond_sigma: np.ndarray
    std_residuals: np.ndarray
    loglik: float
    aic: float
    # Empty until the state comes out of a fit
    std_errors: dict[str, float] = {}
    n_params: int


# ========================================
# Filters
# ========================================


def _variance_path(e: FloatArray, omega: float, alpha: float, beta: float, s0: float) -> FloatArray:
    drive = np.empty_like(e)
    drive[0] = s0
    drive[1:] = omega + alpha * e[:-1] ** 2
    return signal.lfilter([1.0], [1.0, -beta], drive)


def _ar_moments(x: FloatArray, phi1: float, omega: float, alpha: float, beta: float) -> tuple[FloatArray, FloatArray]:
    cond_mean = np.empty_like(x)
    cond_mean[0] = 0.0
    cond_mean[1:] = phi1 * x[:-1]
    variance = _variance_path(x - cond_mean, omega, alpha, beta, float(np.var(x)))
    return cond_mean, variance


def _ma_moments(y: FloatArray, theta1: float, omega: float, alpha: float, beta: float) -> tuple[FloatArray, FloatArray]:
    eta = signal.lfilter([1.0], [1.0, theta1], y)
    variance = _variance_path(eta, omega, alpha, beta, float(np.var(y)))
    return y - eta, variance


def _loglik(
    values: FloatArray,
    cond_mean: FloatArray,
    variance: FloatArray,
    logpdf: Callable[[FloatArray], ArrayLike],
) -> float:
    sigma = np.sqrt(variance)
    z = (values - cond_mean) / sigma
    return float(np.sum(np.asarray(logpdf(z)) - np.log(sigma)))


def _state(
    values: FloatArray,
    cond_mean: FloatArray,
    variance: FloatArray,
    logpdf: Callable[[FloatArray], ArrayLike],
    n_params: int,
) -> FilteredState:
    sigma = np.sqrt(variance)
    loglik = _loglik(values, cond_mean, variance, logpdf)
    return FilteredState(
        cond_mean=cond_mean,
        cond_sigma=sigma,
        std_residuals=(values - cond_mean) / sigma,
        loglik=loglik,
        aic=2.0 * n_params - 2.0 * loglik,
        n_params=n_params,
    )


def filter_ar_garch(params: ArGarchParams, r: ReturnSeries, n_params: int = 5) -> FilteredState:
    """Run the AR(1)-GARCH(1,1) recursion over `r` with fixed parameters."""
    x = np.asarray(r.values, dtype=np.float64)
    cond_mean, variance = _ar_moments(x, params.phi1, params.omega, params.alpha, params.beta)
    return _state(
        x, cond_mean, variance, lambda z: std_t_logpdf(z, params.m1), n_params
    )


def filter_ma_garch_skew(
    params: MaGarchSkewParams, r: ReturnSeries, n_params: int = 6
) -> FilteredState:
    """Run the MA(1)-GARCH(1,1) recursion over `r` with fixed parameters."""
    y = np.asarray(r.values, dtype=np.float64)
    cond_mean, variance = _ma_moments(y, params.theta1, params.omega, params.alpha, params.beta)
    return _state(
        y,
        cond_mean,
        variance,
        lambda z: skew_t_logpdf(z, params.skew, standardized=True),
        n_params,
    )


def pit(state: FilteredState, innovation_cdf: Callable[[FloatArray], ArrayLike]) -> FloatArray:
    """Pseudo-observations: the innovation CDF at each standardized residual."""
    u = np.asarray(innovation_cdf(state.std_residuals), dtype=np.float64)
    return np.clip(u, UMIN, UMAX)


# ========================================
# Maximum likelihood
# ========================================

# Parameters are optimized in an unconstrained space:
#   AR/MA coefficient -> atanh, omega -> log, alpha + beta -> logit,
#   alpha / (alpha + beta) -> logit, degrees of freedom -> log(m - MIN_INNOVATION_DF),
#   xi -> log.


def _garch_to_theta(omega: float, alpha: float, beta: float) -> list[float]:
    persistence = min(max(alpha + beta, 1e-6), 1.0 - 1e-6)
    share = min(max(alpha / (alpha + beta) if alpha + beta > 0 else 0.5, 1e-6), 1.0 - 1e-6)
    return [math.log(omega), float(special.logit(persistence)), float(special.logit(share))]


def _garch_from_theta(theta: FloatArray) -> tuple[float, float, float]:
    persistence = float(special.expit(theta[2]))
    share = float(special.expit(theta[3]))
    return math.exp(theta[1]), persistence * share, persistence * (1.0 - share)


def _df_to_theta(m: float) -> float:
    return math.log(max(m - MIN_INNOVATION_DF, 1e-6))


def ar_garch_to_theta(params: ArGarchParams, fix_df: float | None = None) -> FloatArray:
    theta = [math.atanh(params.phi1)] + _garch_to_theta(params.omega, params.alpha, params.beta)
    if fix_df is None:
        theta.append(_df_to_theta(params.m1))
    return np.array(theta)


def ar_garch_from_theta(theta: FloatArray, fix_df: float | None = None) -> ArGarchParams:
    omega, alpha, beta = _garch_from_theta(theta)
    m1 = fix_df if fix_df is not None else MIN_INNOVATION_DF + math.exp(theta[4])
    return ArGarchParams(phi1=math.tanh(theta[0]), omega=omega, alpha=alpha, beta=beta, m1=m1)


def ar_garch_names(fix_df: float | None = None) -> list[str]:
    return ["phi1", "omega", "alpha", "beta"] + (["m1"] if fix_df is None else [])


def ma_garch_to_theta(
    params: MaGarchSkewParams, fix_df: float | None = None, fix_xi: float | None = None
) -> FloatArray:
    theta = [math.atanh(params.theta1)] + _garch_to_theta(params.omega, params.alpha, params.beta)
    if fix_df is None:
        theta.append(_df_to_theta(params.skew.m))
    if fix_xi is None:
        theta.append(math.log(params.skew.xi))
    return np.array(theta)


def ma_garch_from_theta(
    theta: FloatArray, fix_df: float | None = None, fix_xi: float | None = None
) -> MaGarchSkewParams:
    omega, alpha, beta = _garch_from_theta(theta)
    i = 4
    if fix_df is None:
        m2 = MIN_INNOVATION_DF + math.exp(theta[i])
        i += 1
    else:
        m2 = fix_df
    xi = math.exp(theta[i]) if fix_xi is None else fix_xi
    return MaGarchSkewParams(
        theta1=math.tanh(theta[0]),
        omega=omega,
        alpha=alpha,
        beta=beta,
        skew=SkewTParams(m=m2, xi=xi),
    )


def ma_garch_names(fix_df: float | None = None, fix_xi: float | None = None) -> list[str]:
    names = ["theta1", "omega", "alpha", "beta"]
    names += ["m2"] if fix_df is None else []
    names += ["xi"] if fix_xi is None else []
    return names


def ar_garch_loglik(params: ArGarchParams, x: FloatArray) -> float:
    cond_mean, variance = _ar_moments(x, params.phi1, params.omega, params.alpha, params.beta)
    return _loglik(x, cond_mean, variance, params.innovation_logpdf)


def ma_garch_loglik(params: MaGarchSkewParams, y: FloatArray) -> float:
    cond_mean, variance = _ma_moments(y, params.theta1, params.omega, params.alpha, params.beta)
    return _loglik(y, cond_mean, variance, params.innovation_logpdf)


def _garch_start(values: FloatArray) -> tuple[float, float, float, float]:
    """Moment-based start: AR/MA coefficient from the lag-1 autocorrelation,
    alpha = 0.07, beta = 0.90 and omega matching the sample variance."""
    centered = values - values.mean()
    rho1 = float(np.dot(centered[1:], centered[:-1]) / np.dot(centered, centered))
    coef = float(np.clip(rho1, -0.9, 0.9))
    alpha, beta = 0.07, 0.90
    return coef, float(np.var(values)) * (1.0 - alpha - beta), alpha, beta


def _garch_bounds(values: FloatArray) -> list[tuple[float, float]]:
    log_var = math.log(float(np.var(values)))
    return [(-5.0, 5.0), (log_var - 25.0, log_var + 5.0), (-12.0, 12.0), (-12.0, 12.0)]


DF_BOUNDS = (math.log(0.01), math.log(200.0))
XI_BOUNDS = (math.log(0.2), math.log(5.0))


def _check_length(r: ReturnSeries) -> None:
    if len(r) < MIN_FIT_LENGTH:
        raise DomainError(f"need at least {MIN_FIT_LENGTH} returns to fit, got {len(r)}")


def fit_ar_garch(
    r: ReturnSeries,
    fix_df: float | None = None,
    n_starts: int = N_STARTS,
    seed: int = SEED,
) -> tuple[ArGarchParams, FilteredState]:
    """Fit AR(1)-GARCH(1,1) with unit-variance t innovations by maximum likelihood.

    Args:
        r: The return series.
        fix_df: Hold the innovation degrees of freedom at this value instead of
            estimating them.
        n_starts: Number of optimizer starting points.
        seed: Seed for the jittered starting points.
    """
    _check_length(r)
    x = np.asarray(r.values, dtype=np.float64)
    names = ar_garch_names(fix_df)

    def negloglik(theta: FloatArray) -> float:
        try:
            params = ar_garch_from_theta(theta, fix_df)
        except ValueError:
            return PENALTY
        with np.errstate(all="ignore"):
            value = -ar_garch_loglik(params, x)
        return value if math.isfinite(value) else PENALTY

    def natural(theta: FloatArray) -> FloatArray:
        dumped = ar_garch_from_theta(theta, fix_df).model_dump()
        return np.array([dumped[name] for name in names])

    phi1, omega, alpha, beta = _garch_start(x)
    start = ArGarchParams(phi1=phi1, omega=omega, alpha=alpha, beta=beta, m1=fix_df or 8.0)
    bounds = _garch_bounds(x) + ([DF_BOUNDS] if fix_df is None else [])

    fit = maximize(
        negloglik, ar_garch_to_theta(start, fix_df), bounds, "AR-GARCH", names, natural, n_starts, seed
    )
    params = ar_garch_from_theta(fit.theta, fix_df)
    state = filter_ar_garch(params, r, n_params=len(names)).model_copy(
        update={"std_errors": std_errors(negloglik, fit.theta, natural, names, "AR-GARCH")}
    )
    logger.info(f"AR-GARCH fit on {r.name}: {params.model_dump()}, loglik={state.loglik:.4f}")
    return params, state


def fit_ma_garch_skew(
    r: ReturnSeries,
    fix_df: float | None = None,
    fix_xi: float | None = None,
    n_starts: int = N_STARTS,
    seed: int = SEED,
) -> tuple[MaGarchSkewParams, FilteredState]:
    """Fit MA(1)-GARCH(1,1) with standardized skew-t innovations by maximum likelihood.

    Args:
        r: The return series.
        fix_df: Hold the innovation degrees of freedom m2 at this value.
        fix_xi: Hold the skewness xi at this value (1 gives a symmetric t).
        n_starts: Number of optimizer starting points.
        seed: Seed for the jittered starting points.
    """
    _check_length(r)
    y = np.asarray(r.values, dtype=np.float64)
    names = ma_garch_names(fix_df, fix_xi)

    def negloglik(theta: FloatArray) -> float:
        try:
            params = ma_garch_from_theta(theta, fix_df, fix_xi)
        except ValueError:
            return PENALTY
        with np.errstate(all="ignore"):
            value = -ma_garch_loglik(params, y)
        return value if math.isfinite(value) else PENALTY

    def natural(theta: FloatArray) -> FloatArray:
        params = ma_garch_from_theta(theta, fix_df, fix_xi)
        dumped = params.model_dump(exclude={"skew"}) | {"m2": params.skew.m, "xi": params.skew.xi}
        return np.array([dumped[name] for name in names])

    theta1, omega, alpha, beta = _garch_start(y)
    start = MaGarchSkewParams(
        theta1=theta1,
        omega=omega,
        alpha=alpha,
        beta=beta,
        skew=SkewTParams(m=fix_df or 8.0, xi=fix_xi or 1.0),
    )
    bounds = _garch_bounds(y)
    bounds += [DF_BOUNDS] if fix_df is None else []
    bounds += [XI_BOUNDS] if fix_xi is None else []

    fit = maximize(
        negloglik,
        ma_garch_to_theta(start, fix_df, fix_xi),
        bounds,
        "MA-GARCH",
        names,
        natural,
        n_starts,
        seed,
    )
    params = ma_garch_from_theta(fit.theta, fix_df, fix_xi)
    state = filter_ma_garch_skew(params, r, n_params=len(names)).model_copy(
        update={"std_errors": std_errors(negloglik, fit.theta, natural, names, "MA-GARCH")}
    )
    logger.info(f"MA-GARCH fit on {r.name}: {params.model_dump()}, loglik={state.loglik:.4f}")
    return params, state


# ========================================
# Simulation
# ========================================


def _simulate(
    z: FloatArray, mean_coef: float, ma: bool, omega: float, alpha: float, beta: float
) -> FloatArray:
    size = len(z)
    out = np.empty(size)
    variance = omega / (1.0 - alpha - beta)
    prev_value, prev_e = 0.0, 0.0
    for t in range(size):
        variance = omega + alpha * prev_e**2 + beta * variance
        e = math.sqrt(variance) * z[t]
        value = e + mean_coef * (prev_e if ma else prev_value)
        out[t] = value
        prev_value, prev_e = value, e
    return out


def _coupled_innovations(
    u: FloatArray, size: int, quantile: Callable[[FloatArray], ArrayLike]
) -> FloatArray:
    ua = np.asarray(u, dtype=np.float64)
    if ua.shape != (size,):
        raise DomainError(f"need {size} pseudo-observations, got shape {ua.shape}")
    return np.asarray(quantile(np.clip(ua, UMIN, UMAX)), dtype=np.float64)


def simulate_ar_garch(
    params: ArGarchParams, size: int, seed: int, burn: int = 500, u: FloatArray | None = None
) -> ReturnSeries:
    """Draw an AR(1)-GARCH(1,1)-t path, discarding a burn-in period.

    With `u`, the innovations after the burn-in are the innovation quantiles of
    these pseudo-observations, which ties the path to a copula sample.
    """
    rng = np.random.default_rng(seed)
    m = params.m1
    z = rng.standard_t(m, size=size + burn) * math.sqrt((m - 2.0) / m)
    if u is not None:
        z[burn:] = _coupled_innovations(u, size, params.innovation_quantile)
    values = _simulate(z, params.phi1, False, params.omega, params.alpha, params.beta)
    return ReturnSeries.from_values(values[burn:], name="simulated_ar_garch")


def simulate_ma_garch_skew(
    params: MaGarchSkewParams, size: int, seed: int, burn: int = 500, u: FloatArray | None = None
) -> ReturnSeries:
    """Draw an MA(1)-GARCH(1,1)-skew-t path, discarding a burn-in period."""
    rng = np.random.default_rng(seed)
    z = skew_t_rvs(params.skew, size + burn, rng, standardized=True)
    if u is not None:
        z[burn:] = _coupled_innovations(u, size, params.innovation_quantile)
    values = _simulate(z, params.theta1, True, params.omega, params.alpha, params.beta)
    return ReturnSeries.from_values(values[burn:], name="simulated_ma_garch_skew")
