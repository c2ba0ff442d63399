"""The `monitor` command: monitoring runs, single PELCoV queries, statistics and oracle checks."""

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path

import pandas as pd
from scipy import stats

from spillwatch import copula, oracle
from spillwatch.constants import LOG_LEVEL, SEED
from spillwatch.copula import CopulaParams
from spillwatch.exceptions import MultiplePelcovError, StageError
from spillwatch.marginals.returns import align, descriptive_stats, neg_log_returns, pearson
from spillwatch.monitor.config import build_config
from spillwatch.monitor.fred import load_fred_csv
from spillwatch.monitor.pipeline import run
from spillwatch.monitor.report import emit_csv, summary_lines
from spillwatch.pelcov import PelcovQuery, solve
from spillwatch.timer import Stopwatch

logger = logging.getLogger("monitor")


def _print_lines(lines: list[str]) -> None:
    for line in lines:
        print(line)


def _run(args: argparse.Namespace) -> int:
    config = build_config(
        args.config,
        {
            "x_csv_path": args.x,
            "y_csv_path": args.y,
            "v_levels": args.v,
            "output_path": args.out,
            "fix_innovation_df": args.fix_df,
            "drop_missing": args.drop_missing,
            "seed": args.seed,
            "n_starts": args.n_starts,
        },
    )
    try:
        report = run(config)
    except StageError as e:
        logger.error(f"Stage {e.stage} failed: {e.cause}")
        return 1
    except MultiplePelcovError as e:
        logger.error(str(e))
        return 1

    if config.output_path is not None:
        emit_csv(report, config.output_path)
    assert report.summary is not None
    _print_lines(summary_lines(report.summary))
    return 0


def _pelcov(args: argparse.Namespace) -> int:
    solution = solve(PelcovQuery(v=args.v, params=CopulaParams(rho=args.rho, n=args.n)))
    region = " ".join(f"({a:.12g},{b:.12g})" for a, b in solution.covar_below_var_region)
    _print_lines(
        [
            f"roots={','.join(format(r, '.12g') for r in solution.roots)}",
            f"v_star={solution.v_star:.12g}",
            f"u_star={'none' if solution.u_star is None else format(solution.u_star, '.12g')}",
            f"L0={solution.L0:.12g}",
            f"second_root_exists={str(solution.second_root_predicate).lower()}",
            f"covar_below_var_region={region}",
            f"method={solution.method}",
        ]
    )
    return 0


def _stats(args: argparse.Namespace) -> int:
    series = [neg_log_returns(load_fred_csv(path, drop_missing=args.drop_missing)) for path in args.csv]
    if len(series) == 2:
        series = list(align(series[0], series[1]))
    for r in series:
        s = descriptive_stats(r)
        _print_lines([f"{r.name}_{key}={value:.12g}" for key, value in s.model_dump().items()])
    if len(series) == 2:
        print(f"pearson={pearson(series[0], series[1]):.12g}")
    return 0


def _oracle(args: argparse.Namespace) -> int:
    params = CopulaParams(rho=args.rho, n=args.n)
    if args.mode == "roots":
        roots = oracle.grid_roots(args.v, params, grid_size=args.grid_size)
        print(f"roots={','.join(format(r, '.12g') for r in roots)}")
        return 0

    stopwatch = Stopwatch()
    batch = oracle.sample_t_copula(params, args.size, args.seed)
    logger.info(f"Sampled {batch.size} pairs in {stopwatch.time():.2f}s")
    if args.mode == "h":
        estimate = oracle.empirical_h(batch, args.u, args.v, window=args.window)
        _print_lines(
            [
                f"empirical_h={estimate.value:.12g}",
                f"std_error={estimate.std_error:.12g}",
                f"count={estimate.count}",
                f"h={float(copula.h(args.u, args.v, params)):.12g}",
            ]
        )
        return 0

    tau = stats.kendalltau(batch.u, batch.v).statistic
    _print_lines(
        [
            f"size={batch.size}",
            f"kendall_tau={tau:.12g}",
            f"kendall_tau_expected={2.0 / math.pi * math.asin(args.rho):.12g}",
        ]
    )
    if args.out is not None:
        pd.DataFrame({"u": batch.u, "v": batch.v}).to_csv(args.out, index=False, float_format="%.12g")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monitor",
        description="Spillover risk monitoring with PELCoV levels of Student-t copulas.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Fit all models and compute per-date thresholds.")
    run_parser.add_argument("--config", type=Path, help="Flat YAML file mirroring these flags.")
    run_parser.add_argument("--x", type=Path, help="FRED CSV of the conditioning series X.")
    run_parser.add_argument("--y", type=Path, help="FRED CSV of the monitored series Y.")
    run_parser.add_argument(
        "--v", type=float, action="append", help="Risk level; repeat for several."
    )
    run_parser.add_argument("--out", type=Path, help="Where to write the per-date CSV.")
    run_parser.add_argument(
        "--fix-df", type=str, help="Hold the innovation degrees of freedom fixed, e.g. 10,10."
    )
    run_parser.add_argument(
        "--drop-missing",
        action="store_true",
        default=None,
        help="Skip rows with FRED's '.' missing marker.",
    )
    run_parser.add_argument("--seed", type=int)
    run_parser.add_argument("--n-starts", type=int, help="Optimizer starts per fit.")
    run_parser.set_defaults(handler=_run)

    pelcov_parser = commands.add_parser("pelcov", help="Solve h(u) = v for one copula.")
    pelcov_parser.add_argument("--rho", type=float, required=True)
    pelcov_parser.add_argument("--n", type=float, required=True)
    pelcov_parser.add_argument("--v", type=float, required=True)
    pelcov_parser.set_defaults(handler=_pelcov)

    stats_parser = commands.add_parser("stats", help="Descriptive statistics of negative log returns.")
    stats_parser.add_argument(
        "--csv", type=Path, action="append", required=True, help="FRED CSV; give two for Pearson r."
    )
    stats_parser.add_argument("--drop-missing", action="store_true")
    stats_parser.set_defaults(handler=_stats)

    oracle_parser = commands.add_parser("oracle", help="Monte-Carlo and brute-force checks.")
    oracle_parser.add_argument("mode", choices=["h", "roots", "sample"])
    oracle_parser.add_argument("--rho", type=float, required=True)
    oracle_parser.add_argument("--n", type=float, required=True)
    oracle_parser.add_argument("--u", type=float, default=0.5)
    oracle_parser.add_argument("--v", type=float, default=0.5)
    oracle_parser.add_argument("--size", type=int, default=1_000_000)
    oracle_parser.add_argument("--seed", type=int, default=SEED)
    oracle_parser.add_argument("--window", type=float, default=oracle.DEFAULT_WINDOW)
    oracle_parser.add_argument("--grid-size", type=int, default=1_000_000)
    oracle_parser.add_argument("--out", type=Path, help="Write the sampled pairs as CSV.")
    oracle_parser.set_defaults(handler=_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=LOG_LEVEL,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as e:
        # Bad input: invalid parameters, unreadable files, out-of-domain levels
        logger.error(str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
