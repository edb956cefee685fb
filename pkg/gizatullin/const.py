"""Constants for the Gizatullin surface toolkit."""

from typing import Final

DOMAIN: Final = "gizatullin"

# Schema versions for emitted JSON
REPORT_SCHEMA = "report-v1"
CERT_SCHEMA = "cert-v1"
WORD_SCHEMA = "word-v1"

# Catalog ids (stable strings, used by the CLI and word serialization)
PHI_Y2_DX = "phi.y2_dx"
PHI_XY_DX = "phi.xy_dx"
PHI_XY_DY = "phi.xy_dy"
PSI_V2_DU = "psi.v2_du"
PSI_UV_DU = "psi.uv_du"
PSI_UV_DV = "psi.uv_dv"
CHI_XU_DX = "chi.xu_dx"
CHI_XU_DU = "chi.xu_du"
PHI_Y_DX_LND = "phi.y_dx_lnd"
PSI_V_DU_LND = "psi.v_du_lnd"

BASE_CATALOG_IDS: tuple[str, ...] = (
    PHI_Y2_DX,
    PHI_XY_DX,
    PHI_XY_DY,
    PSI_V2_DU,
    PSI_UV_DU,
    PSI_UV_DV,
    CHI_XU_DX,
    CHI_XU_DU,
)
CATALOG_IDS: tuple[str, ...] = (*BASE_CATALOG_IDS, PHI_Y_DX_LND, PSI_V_DU_LND)

# The (x,y,P) <-> (u,v,Q) symmetry on catalog ids
SWAP_IDS: dict[str, str] = {
    PHI_Y2_DX: PSI_V2_DU,
    PHI_XY_DX: PSI_UV_DU,
    PHI_XY_DY: PSI_UV_DV,
    PSI_V2_DU: PHI_Y2_DX,
    PSI_UV_DU: PHI_XY_DX,
    PSI_UV_DV: PHI_XY_DY,
    CHI_XU_DX: CHI_XU_DU,
    CHI_XU_DU: CHI_XU_DX,
    PHI_Y_DX_LND: PSI_V_DU_LND,
    PSI_V_DU_LND: PHI_Y_DX_LND,
}

# Completeness reasons
REASON_CHART_FLOW = "closed-flow"
REASON_LND = "locally-nilpotent"

# Chart tags
CHART_PHI = "phi"
CHART_PSI = "psi"
CHART_CHI = "chi"

# Suites
SUITE_CHARTS = "charts"
SUITE_BRACKETS = "brackets"
SUITE_IDEAL = "ideal"
SUITE_ISO = "iso"
SUITE_LND = "lnd"
SUITE_FLOWS = "flows"
SUITE_GENERATING = "generating"
SUITE_TRANSITIVITY = "transitivity"
SUITE_ALL = "all"
SUITES: tuple[str, ...] = (
    SUITE_BRACKETS,
    SUITE_CHARTS,
    SUITE_FLOWS,
    SUITE_GENERATING,
    SUITE_IDEAL,
    SUITE_ISO,
    SUITE_LND,
    SUITE_TRANSITIVITY,
)

# Planner modes
MODE_FLOWS = "flows"
MODE_ALGEBRAIC = "algebraic"

# Config keys
CONF_P = "P"
CONF_Q = "Q"
CONF_SUITES = "suites"
CONF_RANGE = "range"
CONF_TOL = "tol"
CONF_SEED = "seed"
CONF_OUT = "out"
CONF_SAMPLES = "samples"
CONF_TIMINGS = "timings"

# Defaults
DEFAULT_RANGE = 1
DEFAULT_TOL = 1e-8
DEFAULT_SEED = 0
DEFAULT_SAMPLES = 25
DEFAULT_RESIDUAL_TOL = 1e-9
THETA_IMAGE_TOL = 1e-10
DEFAULT_RTOL = 1e-10
DEFAULT_MOVE_TOL = 1e-6
DEFAULT_THREADS_CAP = 4
THREADS_ENV = "GIZ_THREADS"

# Below this modulus a chart coordinate counts as zero and closed flows
# hand over to the integrator.
CHART_ZERO_TOL = 1e-6

# Exit codes
EXIT_OK = 0
EXIT_FINDING = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3
