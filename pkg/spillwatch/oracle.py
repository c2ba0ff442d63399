"""Monte-Carlo and brute-force checks for the copula and PELCoV code.

Nothing here shares code paths with the closed forms it checks beyond the
univariate t functions: sampling goes through the stochastic representation of
the bivariate t, and roots are found by scanning a grid for sign changes.

Random numbers come from numpy's PCG64 generator. A batch of `size` draws is
split into chunks of `SAMPLE_CHUNK_SIZE`; chunk i uses the i-th child of
`np.random.SeedSequence(seed).spawn(n_chunks)`. Chunks are drawn in parallel
and concatenated in index order, so a batch only depends on (seed, params, size).
"""

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict

from spillwatch.constants import UMAX, UMIN
from spillwatch.copula import CopulaParams, h, h_from_quantiles, limits
from spillwatch.exceptions import OracleError
from spillwatch.tdist import FloatArray, t_cdf_array, t_quantile_array

logger = logging.getLogger(__name__)

SAMPLE_CHUNK_SIZE = 1_000_000
DEFAULT_WINDOW = 0.005
MIN_WINDOW_COUNT = 200
MIN_GRID_SIZE = 10_000
BISECTION_TOL = 1e-10


class SampleBatch(BaseModel):
    """Pseudo-observations (u, v) drawn from a t copula."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    u: np.ndarray
    v: np.ndarray
    seed: int
    params: CopulaParams

    @property
    def size(self) -> int:
        return len(self.u)


class Estimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    std_error: float
    count: int


def _draw_chunk(
    seed_seq: np.random.SeedSequence, size: int, params: CopulaParams
) -> tuple[FloatArray, FloatArray]:
    rng = np.random.default_rng(seed_seq)
    z = rng.standard_normal((size, 2))
    rho = params.rho
    z1 = z[:, 0]
    z2 = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
    scale = np.sqrt(rng.chisquare(df=params.n, size=size) / params.n)
    u = np.clip(t_cdf_array(z1 / scale, params.n), UMIN, UMAX)
    v = np.clip(t_cdf_array(z2 / scale, params.n), UMIN, UMAX)
    return u, v


def sample_t_copula(
    params: CopulaParams, size: int, seed: int, max_workers: int | None = None
) -> SampleBatch:
    """Draw `size` pairs from the t copula, reproducibly for a given seed."""
    if size < 1:
        raise OracleError(f"size must be at least 1, got {size}")

    n_chunks = -(-size // SAMPLE_CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [
        min(SAMPLE_CHUNK_SIZE, size - i * SAMPLE_CHUNK_SIZE) for i in range(n_chunks)
    ]

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        parts = list(
            pool.map(lambda i: _draw_chunk(children[i], sizes[i], params), range(n_chunks))
        )

    u = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    logger.debug(f"Sampled {size} pairs in {n_chunks} chunk(s), seed={seed}")
    return SampleBatch(u=u, v=v, seed=seed, params=params)


def empirical_h(
    batch: SampleBatch, u: float, v: float, window: float = DEFAULT_WINDOW
) -> Estimate:
    """Estimate P(V <= v | U = u) from the pairs with |U - u| <= window."""
    if window <= 0:
        raise OracleError(f"window must be positive, got {window}")
    mask = np.abs(batch.u - u) <= window
    count = int(mask.sum())
    if count < MIN_WINDOW_COUNT:
        raise OracleError(
            f"Only {count} point(s) within {window} of u={u}, need {MIN_WINDOW_COUNT}"
        )
    p = float(np.mean(batch.v[mask] <= v))
    return Estimate(value=p, std_error=math.sqrt(p * (1.0 - p) / count), count=count)


def empirical_cdf(batch: SampleBatch, u: float, v: float) -> Estimate:
    """Estimate C(u, v) = P(U <= u, V <= v)."""
    p = float(np.mean((batch.u <= u) & (batch.v <= v)))
    return Estimate(
        value=p, std_error=math.sqrt(p * (1.0 - p) / batch.size), count=batch.size
    )


@functools.cache
def _grid_quantiles(grid_size: int, n: float) -> tuple[FloatArray, FloatArray]:
    points = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    x = t_quantile_array(points, n)
    points.setflags(write=False)
    x.setflags(write=False)
    return points, x


def _bisect(
    lo: float, hi: float, f_lo: float, v: float, params: CopulaParams
) -> float:
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = float(h(mid, v, params)) - v
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def grid_roots(
    v: float, params: CopulaParams, grid_size: int = 1_000_000
) -> list[float]:
    """All solutions of h(u, v) = v found by a sign-change scan over a grid.

    The boundary limits L0 and L1 stand in for h at u = 0 and u = 1, so a root
    closer to the boundary than the grid spacing is still bracketed.
    """
    if grid_size < MIN_GRID_SIZE:
        raise OracleError(f"grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}")
    if not 0.0 < v < 1.0:
        raise OracleError(f"v must lie in (0, 1), got {v}")

    points, x = _grid_quantiles(grid_size, params.n)
    y = t_quantile_array(np.asarray(v), params.n)
    L0, L1 = limits(params)

    diff = np.concatenate(
        [[L0 - v], h_from_quantiles(x, y, params.rho, params.n) - v, [L1 - v]]
    )
    u_all = np.concatenate([[0.0], points, [1.0]])

    roots: list[float] = [float(u_all[i]) for i in np.flatnonzero(diff[1:-1] == 0.0) + 1]
    for i in np.flatnonzero(diff[:-1] * diff[1:] < 0.0):
        roots.append(_bisect(float(u_all[i]), float(u_all[i + 1]), float(diff[i]), v, params))

    return sorted(roots)
