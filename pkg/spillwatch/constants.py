import os
from pathlib import Path

repo_root = Path(__file__).parents[1]

LOG_LEVEL = os.environ.get("SPILLWATCH_LOG_LEVEL", "INFO")
# Number of optimizer multistarts for every maximum-likelihood fit
N_STARTS = int(os.environ.get("SPILLWATCH_N_STARTS", "8"))
SEED = int(os.environ.get("SPILLWATCH_SEED", "0"))
FIXTURE_DIR = Path(
    os.environ.get("SPILLWATCH_FIXTURE_DIR", repo_root / "data" / "fred")
)

# Tolerance hierarchy. Root residuals are measured on the h scale.
ROOT_RESIDUAL_TOL = 1e-8
QUANTILE_ROUNDTRIP_TOL = 1e-10
ORACLE_AGREEMENT_TOL = 1e-5
CLASSIFY_TOL = 1e-8
# Denominator of the closed-form PELCoV expression below which we bisect instead
DEGENERATE_DENOMINATOR_TOL = 1e-12

# Pseudo-observations are clipped into [UMIN, UMAX] so quantiles stay finite
UMIN = 1e-12
UMAX = 1 - 1e-12
# Dynamic correlation paths are kept strictly inside (-1, 1)
RHO_MAX = 1 - 1e-10

MIN_FIT_LENGTH = 50
LJUNG_BOX_LAGS = 20
