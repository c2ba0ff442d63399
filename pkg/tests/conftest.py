import math
from pathlib import Path

import numpy as np
import pytest

from spillwatch.dyncopula import EvolutionParams, simulate_dynamic
from spillwatch.marginals.garch import (
    ArGarchParams,
    MaGarchSkewParams,
    simulate_ar_garch,
    simulate_ma_garch_skew,
)
from spillwatch.marginals.returns import ReturnSeries
from spillwatch.monitor.config import MonitorConfig
from spillwatch.monitor.pipeline import MonitorReport, run
from spillwatch.tdist import SkewTParams


def write_fred_csv(path: Path, name: str, r: ReturnSeries, first_price: float) -> Path:
    """Turn negative log returns back into prices and write them the way FRED does."""
    prices = first_price * np.exp(-np.concatenate([[0.0], np.cumsum(r.values)]))
    months = [f"{1999 + i // 12}-{i % 12 + 1:02d}-01" for i in range(len(prices))]
    lines = ["DATE," + name] + [f"{d},{p:.6f}" for d, p in zip(months, prices, strict=True)]
    path.write_text("\n".join(lines) + "\n")
    return path


def synthetic_returns(
    size: int, rho: float, n: float, seed: int
) -> tuple[ReturnSeries, ReturnSeries]:
    """Marginal GARCH paths whose innovations are tied by a constant-correlation t copula."""
    ev = EvolutionParams(nu0=2.0 * math.atanh(rho), nu1=0.0, nu2=0.0, n=n, rho_init=rho)
    copula = simulate_dynamic(ev, size, seed=seed)
    x = simulate_ar_garch(
        ArGarchParams(phi1=0.05, omega=2e-5, alpha=0.07, beta=0.88, m1=8.0),
        size,
        seed=seed + 1,
        u=copula.u,
    )
    y = simulate_ma_garch_skew(
        MaGarchSkewParams(
            theta1=0.23, omega=1.5e-5, alpha=0.06, beta=0.9, skew=SkewTParams(m=10.0, xi=1.3)
        ),
        size,
        seed=seed + 2,
        u=copula.v,
    )
    return x, y


@pytest.fixture(scope="session")
def price_files(tmp_path_factory) -> tuple[Path, Path]:
    """A pair of strongly dependent monthly price files, 301 prices each."""
    directory = tmp_path_factory.mktemp("fred")
    x, y = synthetic_returns(300, rho=0.8, n=8.0, seed=31)
    return (
        write_fred_csv(directory / "XSERIES.csv", "XSERIES", x, 1.16),
        write_fred_csv(directory / "YSERIES.csv", "YSERIES", y, 1.65),
    )


@pytest.fixture(scope="session")
def weak_price_files(tmp_path_factory) -> tuple[Path, Path]:
    """Weakly dependent, heavy-tailed pair: high levels have two PELCoV levels."""
    directory = tmp_path_factory.mktemp("fred_weak")
    x, y = synthetic_returns(300, rho=0.5, n=3.0, seed=41)
    return (
        write_fred_csv(directory / "XSERIES.csv", "XSERIES", x, 1.16),
        write_fred_csv(directory / "YSERIES.csv", "YSERIES", y, 1.65),
    )


@pytest.fixture(scope="session")
def synthetic_report(price_files) -> MonitorReport:
    x_path, y_path = price_files
    return run(
        MonitorConfig(x_csv_path=x_path, y_csv_path=y_path, v_levels=(0.9, 0.95), n_starts=2)
    )
