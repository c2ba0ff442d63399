"""Shared maximum-likelihood machinery: multistart L-BFGS-B and delta-method errors."""

import logging
import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import optimize
from statsmodels.tools.numdiff import approx_fprime, approx_hess

from spillwatch.constants import N_STARTS, SEED
from spillwatch.exceptions import FittingError
from spillwatch.tdist import FloatArray

logger = logging.getLogger(__name__)

# Returned by objectives for parameters where the likelihood is not finite
PENALTY = 1e10
HESSIAN_STEP = 1e-4
JITTER_SCALE = 0.5


class MaximumLikelihoodFit(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: np.ndarray
    loglik: float
    # Minimized objective per start, in start order
    trace: list[float]


def maximize(
    negloglik: Callable[[FloatArray], float],
    base: FloatArray,
    bounds: list[tuple[float, float]],
    label: str,
    names: list[str],
    natural: Callable[[FloatArray], FloatArray],
    n_starts: int = N_STARTS,
    seed: int = SEED,
) -> MaximumLikelihoodFit:
    """Multistart L-BFGS-B in an unconstrained parametrization.

    Start 0 is `base`; the others jitter it with a seeded normal draw, so the
    protocol is deterministic given the seed.

    Raises:
        FittingError: If no start converged. Carries the best parameters seen
            (mapped through `natural`) and the objective per start.
    """
    rng = np.random.default_rng(seed)
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])
    base = np.clip(base, lower, upper)
    starts = [base] + [
        np.clip(base + rng.normal(scale=JITTER_SCALE, size=base.shape), lower, upper)
        for _ in range(max(n_starts, 1) - 1)
    ]

    best: optimize.OptimizeResult | None = None
    best_any: optimize.OptimizeResult | None = None
    trace: list[float] = []
    for i, start in enumerate(starts):
        res = optimize.minimize(negloglik, start, method="L-BFGS-B", bounds=bounds)
        trace.append(float(res.fun))
        # L-BFGS-B reports line-search failures at flat optima; a small
        # projected gradient still counts.
        converged = bool(res.success) or float(np.max(np.abs(res.jac))) < 1e-3
        logger.debug(f"{label} start {i}: objective={res.fun:.6f}, converged={converged}")
        if best_any is None or res.fun < best_any.fun:
            best_any = res
        if converged and res.fun < PENALTY and (best is None or res.fun < best.fun):
            best = res

    assert best_any is not None
    if best is None:
        raise FittingError(
            f"{label}: none of {len(starts)} start(s) converged",
            best_params=dict(zip(names, natural(best_any.x).tolist(), strict=True)),
            best_loglik=-float(best_any.fun),
            trace=trace,
        )
    if best is not best_any:
        logger.warning(f"{label}: the best objective came from a start that did not converge")
    return MaximumLikelihoodFit(theta=np.asarray(best.x), loglik=-float(best.fun), trace=trace)


def std_errors(
    negloglik: Callable[[FloatArray], float],
    theta: FloatArray,
    natural: Callable[[FloatArray], FloatArray],
    names: list[str],
    label: str,
) -> dict[str, float]:
    """Delta-method standard errors from the numerical Hessian in `theta` space."""
    hessian = approx_hess(theta, negloglik, epsilon=HESSIAN_STEP)
    try:
        if not np.all(np.isfinite(hessian)):
            raise np.linalg.LinAlgError("non-finite Hessian")
        np.linalg.cholesky(hessian)
        cov_theta = np.linalg.inv(hessian)
    except np.linalg.LinAlgError:
        logger.warning(f"{label}: Hessian is not positive definite, standard errors unavailable")
        return {name: math.nan for name in names}
    jacobian = np.atleast_2d(approx_fprime(theta, natural, centered=True))
    cov = jacobian @ cov_theta @ jacobian.T
    return {
        name: math.sqrt(max(float(var), 0.0))
        for name, var in zip(names, np.diag(cov), strict=True)
    }


def wald_statistic(
    negloglik: Callable[[FloatArray], float],
    theta_hat: FloatArray,
    theta_null: FloatArray,
) -> float:
    """Joint Wald statistic of `theta_null` against the fit at `theta_hat`.

    Uses the numerical Hessian of `negloglik` at `theta_hat`, so the statistic
    is asymptotically chi-square with len(theta) degrees of freedom under the null.
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    hessian = approx_hess(theta_hat, negloglik, epsilon=HESSIAN_STEP)
    d = theta_hat - np.asarray(theta_null, dtype=np.float64)
    return float(d @ hessian @ d)
