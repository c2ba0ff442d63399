import itertools

import pytest

from spillwatch.copula import CopulaParams, h, limits, u_star
from spillwatch.oracle import grid_roots
from spillwatch.pelcov import (
    PelcovQuery,
    classify,
    covar_level,
    discriminant,
    in_covar_below_region,
    solve,
    v_star,
)
from spillwatch.tdist import t_quantile

V_GRID = [0.05, 0.25, 0.5, 0.95, 0.99]
RHO_GRID = [0.1, 0.3, 0.5, 0.7, 0.9]
N_GRID = [1.5, 2.0, 9.7595, 30.0]
GRID = list(itertools.product(V_GRID, RHO_GRID, N_GRID))


def query(v: float, rho: float, n: float) -> PelcovQuery:
    return PelcovQuery(v=v, params=CopulaParams(rho=rho, n=n))


def test_query_validation():
    with pytest.raises(ValueError, match="rho > 0"):
        query(0.9, -0.2, 3.0)
    with pytest.raises(ValueError, match="rho > 0"):
        query(0.9, 0.0, 3.0)
    with pytest.raises(ValueError):
        query(1.0, 0.5, 3.0)


def test_v_star():
    assert v_star(query(0.5, 0.3, 4.0)) == pytest.approx(0.5, abs=1e-15)
    vs = v_star(query(0.95, 0.5, 9.7595))
    assert 0.95 < vs < 1.0
    assert v_star(query(0.1, 0.5, 9.7595)) < 0.1

    q = query(0.9, 0.4, 2.0)
    assert h(v_star(q), 0.9, q.params) == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize(("v", "rho", "n"), [g for g in GRID if g[0] > 0.5])
def test_h_identities_on_grid(v: float, rho: float, n: float):
    q = query(v, rho, n)
    assert abs(h(v_star(q), v, q.params) - 0.5) <= 1e-10
    assert h(0.5, v, q.params) > v


@pytest.mark.parametrize(("rho", "n"), list(itertools.product(RHO_GRID, N_GRID)))
def test_half_is_the_only_root_at_half(rho: float, n: float):
    solution = solve(query(0.5, rho, n))
    assert solution.roots == (0.5,)
    assert solution.method == "trivial"
    assert abs(h(0.5, 0.5, solution.query.params) - 0.5) <= 1e-12
    assert solution.covar_below_var_region == ((0.0, 0.5),)


@pytest.mark.parametrize(("v", "rho", "n"), GRID)
def test_solution_invariants(v: float, rho: float, n: float):
    q = query(v, rho, n)
    solution = solve(q)
    L0, L1 = limits(q.params)

    assert 1 <= len(solution.roots) <= 2
    assert list(solution.roots) == sorted(solution.roots)
    for root in solution.roots:
        assert 0.0 < root < 1.0
        assert abs(h(root, v, q.params) - v) <= 1e-8
        # Each root is a fixed point of the CoVaR level map
        assert covar_level(root, v, q.params) == pytest.approx(v, abs=1e-8)

    if v == 0.5:
        return
    assert discriminant(q) >= 0.0
    predicted = v > L0 if v > 0.5 else v < L1
    assert solution.second_root_predicate == predicted
    assert solution.root_count == 1 + int(predicted)

    vs, us = solution.v_star, solution.u_star
    assert us is not None
    resolved = predicted and not solution.boundary_root_unresolved
    if v > 0.5:
        assert 0.5 < solution.principal_root < vs
        if resolved:
            assert solution.second_root is not None
            assert 0.0 < solution.second_root < us
    else:
        assert vs < solution.principal_root < 0.5
        if resolved:
            assert solution.second_root is not None
            assert us < solution.second_root < 1.0


@pytest.mark.parametrize(("v", "rho", "n"), GRID)
def test_matches_grid_scan(v: float, rho: float, n: float):
    params = CopulaParams(rho=rho, n=n)
    expected = grid_roots(v, params)
    solution = solve(PelcovQuery(v=v, params=params))
    assert solution.root_count == len(expected)
    if solution.boundary_root_unresolved:
        # The scan brackets it against the boundary limit; drop it there too
        expected = expected[1:] if v > 0.5 else expected[:-1]
    for got, want in zip(solution.roots, expected, strict=True):
        assert abs(got - want) <= 1e-5


def test_unrepresentable_boundary_root():
    # The second root sits about 1e-23 below 1
    solution = solve(query(0.25, 0.1, 30.0))
    assert solution.second_root_predicate
    assert solution.boundary_root_unresolved
    assert solution.root_count == 2
    assert solution.roots == (solution.principal_root,)
    # The mirrored level puts it near 0, where doubles reach much further
    mirrored = solve(query(0.75, 0.1, 30.0))
    assert len(mirrored.roots) == 2
    assert 0.0 < mirrored.roots[0] < 1e-16


@pytest.mark.parametrize(("v", "rho", "n"), [g for g in GRID if g[0] != 0.5])
def test_reflection_symmetry(v: float, rho: float, n: float):
    solution = solve(query(v, rho, n))
    mirrored = solve(query(1.0 - v, rho, n))
    assert solution.root_count == mirrored.root_count
    assert solution.principal_root == pytest.approx(1.0 - mirrored.principal_root, abs=1e-8)
    if solution.second_root is not None and mirrored.second_root is not None:
        assert solution.second_root == pytest.approx(1.0 - mirrored.second_root, abs=1e-8)


def test_high_correlation_has_single_root():
    solution = solve(query(0.99, 0.7, 9.7595))
    assert len(solution.roots) == 1
    assert solution.method == "closed_form"
    assert 0.5 < solution.principal_root < solution.v_star
    assert solution.L0 > 0.99


def test_second_root_predicate_low_correlation():
    q = query(0.99, 0.2, 3.0)
    L0, _ = limits(q.params)
    solution = solve(q)
    assert len(solution.roots) == 1 + int(0.99 > L0)
    for root in solution.roots:
        assert abs(h(root, 0.99, q.params) - 0.99) <= 1e-8


def test_degenerate_denominator_falls_back_to_bisection():
    # rho^2 (n + 1) = c^2 (1 - rho^2) with c the t_{n+1} quantile of v
    n, v = 3.0, 0.9
    c = t_quantile(v, n + 1.0)
    rho = c / (n + 1.0 + c * c) ** 0.5
    solution = solve(query(v, rho, n))
    assert solution.method == "bisection"
    assert solution.discriminant is None
    assert 0.5 < solution.principal_root < solution.v_star
    for root in solution.roots:
        assert abs(h(root, v, solution.query.params) - v) <= 1e-8


@pytest.mark.parametrize("v", [0.5 - 1e-9, 0.5 + 1e-9])
def test_levels_next_to_half(v: float):
    q = query(v, 0.3, 3.0)
    solution = solve(q)
    assert solution.root_count == 1
    assert solution.principal_root == pytest.approx(0.5, abs=1e-6)
    assert abs(h(solution.principal_root, v, q.params) - v) <= 1e-8


def test_regions_upper_level():
    q = query(0.95, 0.2, 3.0)
    solution = solve(q)
    assert len(solution.roots) == 2
    low, high = solution.roots
    assert solution.covar_below_var_region == ((low, high),)

    middle = 0.5 * (low + high)
    assert classify(middle, q) == "covar_below"
    assert in_covar_below_region(middle, solution)
    assert classify(high, q) == "equal"
    assert classify(low, q) == "equal"
    assert classify(0.5 * low, q) == "covar_above"
    assert classify(0.5 * (high + 1.0), q) == "covar_above"
    assert not in_covar_below_region(0.5 * (high + 1.0), solution)


def test_regions_single_root():
    q = query(0.95, 0.7, 5.0)
    solution = solve(q)
    assert solution.L0 > 0.95
    assert len(solution.roots) == 1
    (root,) = solution.roots
    assert solution.covar_below_var_region == ((0.0, root),)
    assert classify(0.5 * root, q) == "covar_below"
    assert classify(root, q) == "equal"
    assert classify(0.999, q) == "covar_above"


def test_classify_far_above_the_root():
    assert classify(0.999, query(0.95, 0.5, 5.0)) == "covar_above"


def test_regions_lower_level():
    q = query(0.05, 0.2, 3.0)
    solution = solve(q)
    assert len(solution.roots) == 2
    low, high = solution.roots
    assert solution.principal_root == low
    assert solution.second_root == high
    assert solution.covar_below_var_region == ((0.0, low), (high, 1.0))
    assert classify(0.5 * low, q) == "covar_below"
    assert classify(0.5 * (low + high), q) == "covar_above"
    assert classify(0.5 * (high + 1.0), q) == "covar_below"


def test_regions_agree_with_classify_on_a_grid():
    for v, rho, n in [(0.95, 0.2, 3.0), (0.99, 0.7, 9.7595), (0.1, 0.4, 2.0), (0.25, 0.9, 30.0)]:
        q = query(v, rho, n)
        solution = solve(q)
        for i in range(1, 200):
            u = i / 200
            if min(abs(u - r) for r in solution.roots) < 1e-6:
                continue
            below = classify(u, q) == "covar_below"
            assert below == in_covar_below_region(u, solution)


def test_covar_level():
    p = CopulaParams(rho=0.5, n=5.0)
    assert covar_level(0.5, 0.5, p) == pytest.approx(0.5, abs=1e-12)
    assert h(0.9, 0.95, p) < 0.95
    w = covar_level(0.9, 0.95, p)
    assert w > 0.95
    assert h(0.9, w, p) == pytest.approx(0.95, abs=1e-10)


def test_u_star_reported():
    q = query(0.95, 0.4, 2.0)
    assert solve(q).u_star == u_star(0.95, q.params)
