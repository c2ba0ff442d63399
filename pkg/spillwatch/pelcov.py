"""Probability-equivalent levels of CoVaR and VaR (PELCoV) for the t copula.

A level u is a PELCoV for risk level v when CoVaR_{v,u}[Y|X] = VaR_v[Y], which
happens exactly when h(u, v) = v. For rho > 0 there is always one such level
between 1/2 and v*, and a second one near the boundary iff v lies beyond the
boundary limit of h (v > L0 for v > 1/2, v < L1 for v < 1/2).

The closed form comes from squaring h(u, v) = v, which gives a quadratic in
a = t_n^-1(u). Squaring can add spurious roots, so every candidate is
substituted back into h. When the candidates don't match what the existence
conditions predict, the roots are bracketed and found by bisection instead.
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import optimize

from spillwatch.constants import (
    CLASSIFY_TOL,
    DEGENERATE_DENOMINATOR_TOL,
    ROOT_RESIDUAL_TOL,
)
from spillwatch.copula import CopulaParams, h, h_inverse, limits, u_star
from spillwatch.tdist import t_cdf_array, t_quantile_array

logger = logging.getLogger(__name__)

Classification = Literal["covar_above", "equal", "covar_below"]
SolveMethod = Literal["trivial", "closed_form", "bisection"]

# Lower brackets tried for a boundary root, from mild to extreme.
_BOUNDARY_BRACKETS = [10.0**-k for k in range(12, 301, 12)]
# Smallest relative tolerance brentq accepts
BRENT_RTOL = 4 * np.finfo(float).eps


class PelcovQuery(BaseModel):
    """Risk level `v` and the copula it is asked about. Needs rho > 0."""

    model_config = ConfigDict(frozen=True)

    v: float
    params: CopulaParams

    @model_validator(mode="after")
    def _check(self) -> "PelcovQuery":
        if not 0.0 < self.v < 1.0:
            raise ValueError(f"v must lie in (0, 1), got {self.v}")
        if self.params.rho <= 0.0:
            raise ValueError(
                f"PELCoV levels are only characterized for rho > 0, got rho={self.params.rho}"
            )
        return self


class PelcovSolution(BaseModel):
    model_config = ConfigDict(frozen=True)

    query: PelcovQuery
    # Sorted ascending. This is the set A(v).
    roots: tuple[float, ...]
    v_star: float
    u_star: float | None
    L0: float
    second_root_predicate: bool
    # Disjoint open intervals of u where CoVaR_{v,u} < VaR_v
    covar_below_var_region: tuple[tuple[float, float], ...]
    discriminant: float | None
    method: SolveMethod
    # The second root exists but lies closer to 0 or 1 than a double resolves
    boundary_root_unresolved: bool = False

    @property
    def root_count(self) -> int:
        """Number of PELCoV levels, counting an unresolved boundary root."""
        return len(self.roots) + int(self.boundary_root_unresolved)

    @property
    def principal_root(self) -> float:
        """The root that always exists, in (1/2, v*) or (v*, 1/2)."""
        if self.query.v >= 0.5:
            return self.roots[-1]
        return self.roots[0]

    @property
    def second_root(self) -> float | None:
        if len(self.roots) < 2:
            return None
        if self.query.v > 0.5:
            return self.roots[0]
        return self.roots[-1]


def v_star(q: PelcovQuery) -> float:
    """Level v* with h(v*, v) = 1/2; bounds the interval of the principal root."""
    n, rho = q.params.n, q.params.rho
    b = t_quantile_array(np.asarray(q.v), n)
    return float(t_cdf_array(b / rho, n))


def discriminant(q: PelcovQuery) -> float:
    """Discriminant k of the quadratic in a = t_n^-1(u), clamped at 0."""
    n, rho = q.params.n, q.params.rho
    b = float(t_quantile_array(np.asarray(q.v), n))
    c = float(t_quantile_array(np.asarray(q.v), n + 1.0))
    one_minus = 1.0 - rho * rho
    k = c * c * one_minus * (n * (n + 1.0) * rho * rho + (n + 1.0) * b * b - n * c * c * one_minus)
    if k < 0.0:
        logger.debug(f"Negative discriminant {k:.3e} for v={q.v}, clamped to 0")
    return max(k, 0.0)


def _residual(u: float, q: PelcovQuery) -> float:
    return float(h(u, q.v, q.params)) - q.v


def _closed_form_candidates(q: PelcovQuery) -> tuple[list[float], float | None]:
    n, rho, v = q.params.n, q.params.rho, q.v
    b = float(t_quantile_array(np.asarray(v), n))
    c = float(t_quantile_array(np.asarray(v), n + 1.0))
    denominator = rho * rho * (n + 1.0) - c * c * (1.0 - rho * rho)
    if abs(denominator) < DEGENERATE_DENOMINATOR_TOL:
        logger.info(f"Degenerate denominator {denominator:.3e} at v={v}, bisecting")
        return [], None

    k = discriminant(q)
    roots: list[float] = []
    for sign in (1.0, -1.0):
        a = (b * rho * (n + 1.0) + sign * math.sqrt(k)) / denominator
        u = float(t_cdf_array(np.asarray(a), n))
        if not 0.0 < u < 1.0:
            continue
        if abs(_residual(u, q)) > ROOT_RESIDUAL_TOL:
            continue
        if any(abs(u - r) <= 1e-14 for r in roots):
            continue
        roots.append(u)
    return sorted(roots), k


def _matches_existence_conditions(
    roots: list[float], q: PelcovQuery, vs: float, us: float | None, second: bool
) -> bool:
    if len(roots) != 1 + int(second):
        return False
    assert us is not None
    if q.v > 0.5:
        principal_ok = 0.5 < roots[-1] < vs
        second_ok = not second or 0.0 < roots[0] < us
    else:
        principal_ok = vs < roots[0] < 0.5
        second_ok = not second or us < roots[-1] < 1.0
    return principal_ok and second_ok


def _brent(q: PelcovQuery, lo: float, hi: float) -> float:
    return float(
        optimize.brentq(lambda u: _residual(u, q), lo, hi, xtol=1e-15, rtol=BRENT_RTOL)
    )


def _boundary_root(q: PelcovQuery, inner: float) -> float | None:
    """Root between the boundary and the critical point `inner`.

    The root can sit arbitrarily close to the boundary, so we walk the bracket
    outward until h changes sign. For v < 1/2 the problem is mirrored. Returns
    None when the root is not representable as a double inside (0, 1).
    """
    if q.v > 0.5:
        for lo in _BOUNDARY_BRACKETS:
            if _residual(lo, q) < 0.0:
                return _brent(q, lo, inner)
    else:
        mirrored = PelcovQuery(v=1.0 - q.v, params=q.params)
        for lo in _BOUNDARY_BRACKETS:
            if _residual(lo, mirrored) < 0.0:
                root = 1.0 - _brent(mirrored, lo, 1.0 - inner)
                if root < 1.0:
                    return root
                break
    logger.warning(
        f"Second PELCoV predicted at v={q.v} but it is closer to the boundary "
        "than double precision resolves"
    )
    return None


def _bisection_roots(
    q: PelcovQuery, vs: float, us: float | None, second: bool
) -> tuple[list[float], bool]:
    """Roots by bracketing, and whether a predicted second root was out of reach."""
    if q.v > 0.5:
        roots = [_brent(q, 0.5, vs)]
    else:
        roots = [_brent(q, vs, 0.5)]
    unresolved = False
    if second:
        assert us is not None
        boundary = _boundary_root(q, us)
        if boundary is None:
            unresolved = True
        else:
            roots.append(boundary)
    return sorted(roots), unresolved


def _region(
    v: float, roots: list[float], second_found: bool
) -> tuple[tuple[float, float], ...]:
    if v == 0.5:
        return ((0.0, 0.5),)
    if v > 0.5:
        lower = roots[0] if second_found else 0.0
        return ((lower, roots[-1]),)
    if second_found:
        return ((0.0, roots[0]), (roots[-1], 1.0))
    return ((0.0, roots[0]),)


def solve(q: PelcovQuery) -> PelcovSolution:
    """Compute the set of PELCoV levels A(v) and the regions around them."""
    L0, L1 = limits(q.params)
    if q.v == 0.5:
        return PelcovSolution(
            query=q,
            roots=(0.5,),
            v_star=0.5,
            u_star=None,
            L0=L0,
            second_root_predicate=False,
            covar_below_var_region=_region(0.5, [0.5], False),
            discriminant=None,
            method="trivial",
        )

    vs = v_star(q)
    us = u_star(q.v, q.params)
    second = q.v > L0 if q.v > 0.5 else q.v < L1

    roots, k = _closed_form_candidates(q)
    method: SolveMethod = "closed_form"
    unresolved = False
    if not _matches_existence_conditions(roots, q, vs, us, second):
        if k is not None:
            logger.warning(
                f"Closed form gave {len(roots)} root(s) at v={q.v}, rho={q.params.rho}, "
                f"n={q.params.n}, expected {1 + int(second)}; falling back to bisection"
            )
        roots, unresolved = _bisection_roots(q, vs, us, second)
        method = "bisection"

    return PelcovSolution(
        query=q,
        roots=tuple(roots),
        v_star=vs,
        u_star=us,
        L0=L0,
        second_root_predicate=second,
        covar_below_var_region=_region(q.v, roots, len(roots) == 2),
        discriminant=k,
        method=method,
        boundary_root_unresolved=unresolved,
    )


def covar_level(u: float, v: float, params: CopulaParams) -> float:
    """Copula-scale level w of CoVaR_{v,u}[Y|X], i.e. the solution of h(u, w) = v.

    Composing with the quantile function of Y gives CoVaR in return units.
    """
    return float(h_inverse(v, u, params))


def classify(u: float, q: PelcovQuery, tol: float = CLASSIFY_TOL) -> Classification:
    """Compare CoVaR_{v,u}[Y|X] with VaR_v[Y] through the sign of h(u, v) - v."""
    diff = _residual(u, q)
    if diff < -tol:
        return "covar_above"
    if diff > tol:
        return "covar_below"
    return "equal"


def in_covar_below_region(u: float, solution: PelcovSolution) -> bool:
    return any(lo < u < hi for lo, hi in solution.covar_below_var_region)
