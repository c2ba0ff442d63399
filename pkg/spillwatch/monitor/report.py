"""Plot-ready CSV output and key-value summary lines for a monitoring report."""

import csv
import logging
from pathlib import Path

from spillwatch.monitor.pipeline import MonitorReport, MonitorSummary

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["date", "x", "y", "rho", "L0"]
LEVEL_COLUMNS = ["u", "x_threshold", "var_y", "alert"]


def _num(value: float) -> str:
    return format(value, ".12g")


def level_suffix(v: float) -> str:
    return format(v, "g")


def header(v_levels: tuple[float, ...]) -> list[str]:
    return BASE_COLUMNS + [
        f"{column}_{level_suffix(v)}" for v in v_levels for column in LEVEL_COLUMNS
    ]


def emit_csv(report: MonitorReport, path: Path | str) -> None:
    """Write one row per date; identical reports give byte-identical files."""
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header(report.v_levels))
        for row in report.rows:
            line = [row.date.isoformat(), _num(row.x), _num(row.y), _num(row.rho), _num(row.L0)]
            for v in report.v_levels:
                level = row.levels[v]
                line += [
                    _num(level.u_v),
                    _num(level.x_threshold),
                    _num(level.var_y),
                    "true" if level.alert else "false",
                ]
            writer.writerow(line)
    logger.info(f"Wrote {len(report.rows)} row(s) to {path}")


def summary_lines(summary: MonitorSummary) -> list[str]:
    """The run summary as `key=value` lines, in a fixed order."""
    lines = [
        f"n_obs={summary.n_obs}",
        f"pearson={_num(summary.pearson)}",
        f"x_std={_num(summary.x_stats.std)}",
        f"y_std={_num(summary.y_stats.std)}",
    ]
    for prefix, params in (("x", summary.x_params), ("y", summary.y_params)):
        for key, value in params.model_dump().items():
            if isinstance(value, dict):
                lines += [f"{prefix}_{key}_{k}={_num(v)}" for k, v in value.items()]
            else:
                lines.append(f"{prefix}_{key}={_num(value)}")
    for prefix, diag in (("x", summary.x_diagnostics), ("y", summary.y_diagnostics)):
        lines += [f"{prefix}_{key}_pvalue={_num(value)}" for key, value in diag.model_dump().items()]

    static = summary.static_fit
    lines += [
        f"static_rho={_num(static.params.rho)}",
        f"static_n={_num(static.params.n)}",
        f"static_loglik={_num(static.loglik)}",
    ]
    evolution = summary.dynamic_fit.params
    lines += [
        f"dynamic_nu0={_num(evolution.nu0)}",
        f"dynamic_nu1={_num(evolution.nu1)}",
        f"dynamic_nu2={_num(evolution.nu2)}",
        f"dynamic_loglik={_num(summary.dynamic_fit.loglik)}",
        f"min_L0={_num(summary.min_L0)}",
    ]
    for v, counts in summary.root_counts.items():
        suffix = level_suffix(v)
        lines += [f"root_count_{suffix}_{k}={c}" for k, c in sorted(counts.items())]
        low, high = summary.u_v_range[v]
        lines += [
            f"u_min_{suffix}={_num(low)}",
            f"u_max_{suffix}={_num(high)}",
            f"alerts_{suffix}={summary.alert_counts[v]}",
        ]
    lines += [f"seconds_{stage}={s:.3f}" for stage, s in summary.stage_durations.items()]
    return lines
