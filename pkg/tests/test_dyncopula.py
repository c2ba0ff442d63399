import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from spillwatch.copula import CopulaParams, copula_logpdf, limits
from spillwatch.dyncopula import (
    EvolutionParams,
    copula_loglik_path,
    fit_dynamic,
    fit_joint,
    kendall_rho,
    lambda1,
    rho_path,
    simulate_dynamic,
    static_fit,
)
from spillwatch.exceptions import BoundaryError, DomainError
from spillwatch.marginals.garch import (
    ArGarchParams,
    MaGarchSkewParams,
    fit_ar_garch,
    fit_ma_garch_skew,
    pit,
    simulate_ar_garch,
    simulate_ma_garch_skew,
)
from spillwatch.mle import wald_statistic
from spillwatch.oracle import sample_t_copula
from spillwatch.tdist import SkewTParams

EV_TRUE = EvolutionParams(nu0=0.3, nu1=1.5, nu2=0.3, n=6.0, rho_init=0.5)


@pytest.fixture(scope="module")
def dynamic_sample():
    return simulate_dynamic(EV_TRUE, 2000, seed=12)


def test_lambda1():
    assert lambda1(0.0) == 0.0
    assert lambda1(1.3) == pytest.approx(-lambda1(-1.3), abs=1e-16)
    assert lambda1(1.0) == pytest.approx((1 - math.exp(-1)) / (1 + math.exp(-1)), rel=1e-14)
    assert lambda1(50.0) == pytest.approx(1.0, abs=1e-15)
    assert lambda1(-800.0) == -1.0
    with pytest.raises(DomainError):
        lambda1(math.inf)


@given(x=st.floats(min_value=-700.0, max_value=700.0))
def test_lambda1_is_odd_and_bounded(x: float):
    assert lambda1(-x) == -lambda1(x)
    assert -1.0 <= lambda1(x) <= 1.0


def test_evolution_params_validation():
    with pytest.raises(ValueError):
        EvolutionParams(nu0=math.nan, nu1=0.0, nu2=0.0, n=5.0, rho_init=0.0)
    with pytest.raises(ValueError, match="n must be"):
        EvolutionParams(nu0=0.0, nu1=0.0, nu2=0.0, n=1.0, rho_init=0.0)
    with pytest.raises(ValueError, match="rho_init"):
        EvolutionParams(nu0=0.0, nu1=0.0, nu2=0.0, n=5.0, rho_init=1.0)


def test_constant_path():
    batch = sample_t_copula(CopulaParams(rho=0.3, n=5.0), 200, seed=1)
    ev = EvolutionParams(nu0=0.8, nu1=0.0, nu2=0.0, n=5.0, rho_init=0.1)
    path = rho_path(ev, batch.u, batch.v)
    np.testing.assert_array_equal(path.rho, np.full(200, math.tanh(0.4)))
    L0, _ = limits(CopulaParams(rho=math.tanh(0.4), n=5.0))
    assert np.all(path.L0 == L0)

    zero = rho_path(ev.model_copy(update={"nu0": 0.0}), batch.u, batch.v)
    np.testing.assert_array_equal(zero.rho, np.zeros(200))
    np.testing.assert_array_equal(zero.L0, np.full(200, 0.5))


def test_rho_path_uses_lagged_products(dynamic_sample):
    # The path reconstructed from the pseudo-observations is the simulated one
    path = rho_path(EV_TRUE, dynamic_sample.u, dynamic_sample.v)
    np.testing.assert_allclose(path.rho, dynamic_sample.rho, atol=1e-8)
    # The first date has no lags
    assert path.rho[0] == pytest.approx(lambda1(EV_TRUE.nu0 + EV_TRUE.nu1 * EV_TRUE.rho_init))
    assert np.all(np.abs(path.rho) < 1)
    assert np.all((path.L0 > 0.5) == (path.rho > 0))


def test_rho_path_rejects_bad_pseudo_observations():
    with pytest.raises(DomainError):
        rho_path(EV_TRUE, np.array([0.5, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(DomainError):
        rho_path(EV_TRUE, np.array([0.5, 0.2]), np.array([0.5]))


def test_copula_loglik_path():
    batch = sample_t_copula(CopulaParams(rho=0.4, n=4.0), 5, seed=2)
    rho = np.array([0.1, 0.2, 0.3, 0.4, -0.5])
    values = copula_loglik_path(rho, batch.u, batch.v, 4.0)
    for i in range(5):
        expected = copula_logpdf(batch.u[i], batch.v[i], CopulaParams(rho=rho[i], n=4.0))
        assert values[i] == pytest.approx(expected, abs=1e-10)


def test_static_fit_recovers_truth():
    batch = sample_t_copula(CopulaParams(rho=0.5, n=6.0), 5000, seed=3)
    assert kendall_rho(batch.u, batch.v) == pytest.approx(0.5, abs=0.05)
    fit = static_fit(batch.u, batch.v, n_starts=2)
    assert abs(fit.params.rho - 0.5) <= 3 * fit.std_errors["rho"]
    assert abs(fit.params.n - 6.0) <= 3 * fit.std_errors["n"]
    assert fit.loglik > 0


def test_static_fit_comonotone_hits_boundary():
    u = np.random.default_rng(4).uniform(size=200)
    with pytest.raises(BoundaryError) as excinfo:
        static_fit(u, u.copy(), n_starts=1)
    assert excinfo.value.best_params is not None
    assert excinfo.value.best_params["rho"] > 0.999


def test_static_fit_needs_enough_pairs():
    with pytest.raises(DomainError, match="at least 50"):
        static_fit(np.full(10, 0.5), np.full(10, 0.5))


def test_simulate_dynamic():
    a = simulate_dynamic(EV_TRUE, 300, seed=5)
    b = simulate_dynamic(EV_TRUE, 300, seed=5)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.rho, b.rho)
    assert np.all((a.u > 0) & (a.u < 1) & (a.v > 0) & (a.v < 1))
    with pytest.raises(DomainError):
        simulate_dynamic(EV_TRUE, 0, seed=5)


def test_fit_dynamic_recovers_path(dynamic_sample):
    u, v = dynamic_sample.u, dynamic_sample.v
    fit = fit_dynamic(u, v, n=EV_TRUE.n, rho_init=EV_TRUE.rho_init, n_starts=2)
    truth = float(np.sum(copula_loglik_path(dynamic_sample.rho, u, v, EV_TRUE.n)))
    # The maximizer beats the truth, by a likelihood-ratio amount for 3 parameters
    assert fit.loglik >= truth - 1e-6
    assert fit.loglik - truth <= 8.0
    fitted = rho_path(fit.params, u, v).rho
    assert float(np.mean(np.abs(fitted - dynamic_sample.rho))) < 0.05
    assert len(fit.trace) == 2
    assert set(fit.std_errors) == {"nu0", "nu1", "nu2"}


@pytest.mark.slow
def test_fit_dynamic_replications_cover_truth():
    truth = np.array([EV_TRUE.nu0, EV_TRUE.nu1, EV_TRUE.nu2])
    critical = stats.chi2.ppf(0.95, len(truth))
    covered = 0
    for i in range(20):
        sample = simulate_dynamic(EV_TRUE, 2000, seed=300 + i)
        fit = fit_dynamic(
            sample.u, sample.v, n=EV_TRUE.n, rho_init=EV_TRUE.rho_init, n_starts=2, seed=i
        )

        def negloglik(theta, u=sample.u, v=sample.v):
            ev = EV_TRUE.model_copy(update={"nu0": theta[0], "nu1": theta[1], "nu2": theta[2]})
            return -float(np.sum(copula_loglik_path(rho_path(ev, u, v).rho, u, v, ev.n)))

        fitted = np.array([fit.params.nu0, fit.params.nu1, fit.params.nu2])
        covered += wald_statistic(negloglik, fitted, truth) <= critical
    assert covered >= 18


def test_fit_dynamic_on_constant_dependence():
    batch = sample_t_copula(CopulaParams(rho=0.5, n=6.0), 2000, seed=6)
    static = static_fit(batch.u, batch.v, n_starts=1)
    fit = fit_dynamic(batch.u, batch.v, n=static.params.n, rho_init=static.params.rho, n_starts=1)
    # The static model is nested at nu1 = nu2 = 0
    assert fit.loglik >= static.loglik - 1e-6
    assert fit.loglik - static.loglik <= 5.0
    path = rho_path(fit.params, batch.u, batch.v)
    assert float(np.std(path.rho)) < 0.1
    assert float(np.mean(path.rho)) == pytest.approx(static.params.rho, abs=0.05)


def test_joint_fit_improves_on_two_stage():
    size = 500
    x = simulate_ar_garch(
        ArGarchParams(phi1=0.05, omega=1e-5, alpha=0.07, beta=0.9, m1=8.0), size, seed=7
    )
    y = simulate_ma_garch_skew(
        MaGarchSkewParams(
            theta1=0.2, omega=1e-5, alpha=0.07, beta=0.9, skew=SkewTParams(m=8.0, xi=1.2)
        ),
        size,
        seed=8,
    )
    x_params, x_state = fit_ar_garch(x, n_starts=1)
    y_params, y_state = fit_ma_garch_skew(y, n_starts=1)
    u, v = pit(x_state, x_params.innovation_cdf), pit(y_state, y_params.innovation_cdf)
    dynamic = fit_dynamic(u, v, n=6.0, rho_init=0.1, n_starts=1)
    two_stage = x_state.loglik + y_state.loglik + dynamic.loglik

    joint = fit_joint(x, y, x_params, y_params, dynamic.params)
    assert joint.loglik >= two_stage - 1e-4
    assert joint.evolution.n == 6.0
    for name, two_stage_value, joint_value in [
        ("x.phi1", x_params.phi1, joint.x_params.phi1),
        ("y.theta1", y_params.theta1, joint.y_params.theta1),
    ]:
        se = joint.std_errors[name]
        if math.isfinite(se):
            assert abs(joint_value - two_stage_value) <= 3 * se


def test_joint_fit_needs_common_dates():
    params = ArGarchParams(phi1=0.05, omega=1e-5, alpha=0.07, beta=0.9, m1=8.0)
    x = simulate_ar_garch(params, 100, seed=9)
    y = simulate_ar_garch(params, 90, seed=10)
    y_params = MaGarchSkewParams(
        theta1=0.2, omega=1e-5, alpha=0.07, beta=0.9, skew=SkewTParams(m=8.0, xi=1.2)
    )
    with pytest.raises(DomainError, match="same dates"):
        fit_joint(x, y, params, y_params, EV_TRUE)
