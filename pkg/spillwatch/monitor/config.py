import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator
from ruamel.yaml import YAML

from spillwatch.constants import N_STARTS, SEED

logger = logging.getLogger(__name__)

DEFAULT_V_LEVELS = (0.95, 0.99)

# Keys of the flat config file, which mirror the `monitor run` flags
FILE_KEYS = {
    "x": "x_csv_path",
    "y": "y_csv_path",
    "v": "v_levels",
    "out": "output_path",
    "fix_df": "fix_innovation_df",
    "drop_missing": "drop_missing",
    "seed": "seed",
    "n_starts": "n_starts",
}


class MonitorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_csv_path: Path
    y_csv_path: Path
    v_levels: tuple[float, ...] = DEFAULT_V_LEVELS
    # Degrees of freedom (m1, m2) to hold fixed in the marginal fits
    fix_innovation_df: tuple[float, float] | None = None
    output_path: Path | None = None
    drop_missing: bool = False
    seed: int = SEED
    n_starts: int = Field(default=N_STARTS, ge=1)

    @field_validator("v_levels")
    @classmethod
    def _check_levels(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("at least one v level is needed")
        for v in value:
            if not 0.0 < v < 1.0:
                raise ValueError(f"v levels must lie in (0, 1), got {v}")
        if len(set(value)) != len(value):
            raise ValueError(f"v levels must be distinct, got {value}")
        return value

    @field_validator("fix_innovation_df", mode="before")
    @classmethod
    def _parse_fix_df(cls, value: Any) -> Any:
        # "10,10" on the command line or in the file
        if isinstance(value, str):
            return tuple(float(part) for part in value.split(","))
        return value

    @field_validator("fix_innovation_df")
    @classmethod
    def _check_fix_df(cls, value: tuple[float, float] | None) -> tuple[float, float] | None:
        if value is not None and not all(m > 2 for m in value):
            raise ValueError(f"fixed degrees of freedom must be > 2, got {value}")
        return value


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a flat key-value YAML file and rename its keys to MonitorConfig fields."""
    with path.open() as f:
        raw = YAML(typ="safe").load(f) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a flat mapping of keys to values")

    values: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in FILE_KEYS:
            raise ValueError(f"{path}: unknown key {key!r}, expected one of {sorted(FILE_KEYS)}")
        if isinstance(value, dict):
            raise ValueError(f"{path}: key {key!r} must not be nested")
        values[FILE_KEYS[key]] = value
    if "v_levels" in values and not isinstance(values["v_levels"], list):
        values["v_levels"] = [values["v_levels"]]
    return values


def build_config(file_path: Path | None, overrides: dict[str, Any]) -> MonitorConfig:
    """Merge a config file with command-line values; the command line wins.

    `overrides` uses MonitorConfig field names; None values mean "not given".
    """
    values = load_config_file(file_path) if file_path is not None else {}
    given = {key: value for key, value in overrides.items() if value is not None}
    if given.keys() & values.keys():
        logger.info(f"Command line overrides config file for: {sorted(given.keys() & values.keys())}")
    return MonitorConfig(**(values | given))
