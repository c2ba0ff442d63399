"""End-to-end monitoring run: from two FRED price files to per-date PELCoV thresholds.

For each date t and risk level v the run finds the PELCoV level u_v(t), the
level of X at which CoVaR of Y equals VaR of Y under that date's copula, and
turns it into a threshold on X in return units. A date alerts when the
observed loss of X exceeds that threshold, meaning CoVaR of Y already exceeds
its VaR there.
"""

import contextlib
import datetime
import logging
from collections.abc import Iterator

import numpy as np
from pydantic import BaseModel, ConfigDict

from spillwatch.copula import CopulaParams
from spillwatch.dyncopula import (
    DynamicCopulaFit,
    StaticCopulaFit,
    fit_dynamic,
    rho_path,
    static_fit,
)
from spillwatch.exceptions import MultiplePelcovError, StageError
from spillwatch.marginals.diagnostics import ResidualDiagnostics, diagnose
from spillwatch.marginals.garch import (
    ArGarchParams,
    MaGarchSkewParams,
    fit_ar_garch,
    fit_ma_garch_skew,
    pit,
)
from spillwatch.marginals.returns import (
    DescriptiveStats,
    align,
    descriptive_stats,
    neg_log_returns,
    pearson,
)
from spillwatch.monitor.config import MonitorConfig
from spillwatch.monitor.fred import load_fred_csv
from spillwatch.pelcov import PelcovQuery, solve
from spillwatch.timer import PhasesStopwatch

logger = logging.getLogger(__name__)

STAGES = [
    "ingest",
    "marginals",
    "pit",
    "static_copula",
    "dynamic_copula",
    "pelcov",
    "thresholds",
]


class LevelRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    v: float
    u_v: float
    # Conditional quantile of X at u_v, in return units
    x_threshold: float
    # Conditional VaR of Y at v, in return units
    var_y: float
    alert: bool
    n_roots: int


class MonitorRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    date: datetime.date
    x: float
    y: float
    rho: float
    L0: float
    levels: dict[float, LevelRow]


class MonitorSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_obs: int
    x_stats: DescriptiveStats
    y_stats: DescriptiveStats
    pearson: float
    x_params: ArGarchParams
    y_params: MaGarchSkewParams
    x_diagnostics: ResidualDiagnostics
    y_diagnostics: ResidualDiagnostics
    static_fit: StaticCopulaFit
    dynamic_fit: DynamicCopulaFit
    min_L0: float
    # Per v: number of dates with each root count
    root_counts: dict[float, dict[int, int]]
    u_v_range: dict[float, tuple[float, float]]
    alert_counts: dict[float, int]
    stage_durations: dict[str, float]


class MonitorReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    v_levels: tuple[float, ...]
    rows: list[MonitorRow]
    summary: MonitorSummary | None = None


@contextlib.contextmanager
def _stage(name: str, stopwatch: PhasesStopwatch) -> Iterator[None]:
    stopwatch.time_phase_if_not_started(name)
    logger.info(f"Stage {name}")
    try:
        yield
    except MultiplePelcovError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def pelcov_levels(rho: np.ndarray, n: float, v: float) -> tuple[np.ndarray, np.ndarray]:
    """Principal PELCoV level and root count for each date's correlation.

    Dates with the same correlation share one solve.
    """
    unique, inverse = np.unique(np.asarray(rho, dtype=np.float64), return_inverse=True)
    solutions = [solve(PelcovQuery(v=v, params=CopulaParams(rho=float(r), n=n))) for r in unique]
    principal = np.array([s.principal_root for s in solutions])
    counts = np.array([s.root_count for s in solutions], dtype=np.int64)
    return principal[inverse], counts[inverse]


def run(config: MonitorConfig) -> MonitorReport:
    """Run every stage of the monitor on the two configured price files.

    Raises:
        StageError: A stage failed; `stage` names it and the cause is chained.
        MultiplePelcovError: Some date has two PELCoV levels for a configured v,
            so its threshold is ambiguous.
    """
    stopwatch = PhasesStopwatch(STAGES)
    fix_x, fix_y = config.fix_innovation_df or (None, None)

    with _stage("ingest", stopwatch):
        x_prices = load_fred_csv(config.x_csv_path, drop_missing=config.drop_missing)
        y_prices = load_fred_csv(config.y_csv_path, drop_missing=config.drop_missing)
        x_ret, y_ret = align(neg_log_returns(x_prices), neg_log_returns(y_prices))
        x_stats, y_stats = descriptive_stats(x_ret), descriptive_stats(y_ret)
        corr = pearson(x_ret, y_ret)
        logger.info(f"{len(x_ret)} aligned returns, Pearson r = {corr:.4f}")

    with _stage("marginals", stopwatch):
        x_params, x_state = fit_ar_garch(x_ret, fix_df=fix_x, n_starts=config.n_starts, seed=config.seed)
        y_params, y_state = fit_ma_garch_skew(y_ret, fix_df=fix_y, n_starts=config.n_starts, seed=config.seed)
        x_diag = diagnose(x_state, x_params.innovation_cdf)
        y_diag = diagnose(y_state, y_params.innovation_cdf)

    with _stage("pit", stopwatch):
        u = pit(x_state, x_params.innovation_cdf)
        v = pit(y_state, y_params.innovation_cdf)

    with _stage("static_copula", stopwatch):
        static = static_fit(u, v, n_starts=config.n_starts, seed=config.seed)

    with _stage("dynamic_copula", stopwatch):
        dynamic = fit_dynamic(
            u,
            v,
            n=static.params.n,
            rho_init=static.params.rho,
            n_starts=config.n_starts,
            seed=config.seed,
        )
        path = rho_path(dynamic.params, u, v)
        logger.info(f"min L0 over dates: {float(np.min(path.L0)):.6f}")

    n = static.params.n
    u_levels: dict[float, np.ndarray] = {}
    n_roots: dict[float, np.ndarray] = {}
    multiple: dict[float, list[datetime.date]] = {}
    with _stage("pelcov", stopwatch):
        for level in config.v_levels:
            u_levels[level], n_roots[level] = pelcov_levels(path.rho, n, level)
            multiple[level] = [
                d for d, count in zip(x_ret.dates, n_roots[level], strict=True) if count == 2
            ]
    if any(multiple.values()):
        raise MultiplePelcovError({level: dates for level, dates in multiple.items() if dates})

    rows: list[MonitorRow] = []
    with _stage("thresholds", stopwatch):
        thresholds: dict[float, np.ndarray] = {}
        var_y: dict[float, np.ndarray] = {}
        for level in config.v_levels:
            z_x = np.asarray(x_params.innovation_quantile(u_levels[level]))
            thresholds[level] = x_state.cond_mean + x_state.cond_sigma * z_x
            z_y = float(y_params.innovation_quantile(level))
            var_y[level] = y_state.cond_mean + y_state.cond_sigma * z_y

        for t, date in enumerate(x_ret.dates):
            x_t = float(x_ret.values[t])
            rows.append(
                MonitorRow(
                    date=date,
                    x=x_t,
                    y=float(y_ret.values[t]),
                    rho=float(path.rho[t]),
                    L0=float(path.L0[t]),
                    levels={
                        level: LevelRow(
                            v=level,
                            u_v=float(u_levels[level][t]),
                            x_threshold=float(thresholds[level][t]),
                            var_y=float(var_y[level][t]),
                            alert=x_t > float(thresholds[level][t]),
                            n_roots=int(n_roots[level][t]),
                        )
                        for level in config.v_levels
                    },
                )
            )
    stopwatch.stop()
    durations = stopwatch.durations()
    logger.info(
        "Stage durations: " + ", ".join(f"{k}={s:.2f}s" for k, s in durations.items())
    )

    summary = MonitorSummary(
        n_obs=len(x_ret),
        x_stats=x_stats,
        y_stats=y_stats,
        pearson=corr,
        x_params=x_params,
        y_params=y_params,
        x_diagnostics=x_diag,
        y_diagnostics=y_diag,
        static_fit=static,
        dynamic_fit=dynamic,
        min_L0=float(np.min(path.L0)),
        root_counts={
            level: {int(k): int(c) for k, c in zip(*np.unique(n_roots[level], return_counts=True), strict=True)}
            for level in config.v_levels
        },
        u_v_range={
            level: (float(np.min(u_levels[level])), float(np.max(u_levels[level])))
            for level in config.v_levels
        },
        alert_counts={
            level: sum(row.levels[level].alert for row in rows) for level in config.v_levels
        },
        stage_durations=durations,
    )
    return MonitorReport(v_levels=config.v_levels, rows=rows, summary=summary)
