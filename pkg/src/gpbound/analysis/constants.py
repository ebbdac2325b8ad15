from pathlib import PurePath

# ---- kernels ----
PHI_FLOOR = 1e-8
MONOTONE_REL_STEP = 1e-3
MONOTONE_TOL = 1e-12
QUASICONCAVE_GRID = 33
QUASICONCAVE_TOL = 1e-12
CHECK_INPUT_RANGE = (-3.0, 3.0)
CHECK_POLY_INPUT_RANGE = (0.0, 3.0)
DEFAULT_CHECK_BUDGET = 1000

# ---- gp-core ----
JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_MAX = 1e-4
VARIANCE_CLAMP_TOL = 1e-10
DEFAULT_RESTARTS = 10
DEFAULT_LOG_PHI_BOX = (-3.0, 3.0)
FIT_LOG_PHI_BOUNDS = (-9.0, 9.0)
FIT_MAX_ITER = 500
DEFAULT_NOISE_VAR = 0.01

# ---- bound-engine ----
H_ZERO_THRESHOLD = 1e-14
BOX_TOL = 1e-8
BOX_MAX_ITER = 500
BOX_MULTI_STARTS = 5
BOUND_SLACK = 1e-8
MAX_CACHE_ENTRIES = 64

# ---- oracle ----
DEFAULT_MC_SAMPLES = 200_000
DEFAULT_MC_BATCH = 10_000
MC_STATISTICAL_SAMPLES = 1000
GRID_MAX_DIM = 4
DEFAULT_GRID_RESOLUTION = 200

# ---- run artifacts ----
RUNS_DIR = PurePath("runs")
MANIFEST_FILENAME = "manifest.json"
AUDIT_LOG_FILENAME = "run.audit.jsonl"
MODEL_FILENAME = "model.json"
BOUNDS_FILENAME = "bounds.csv"
ORACLE_FILENAME = "oracle.json"
CHECK_FILENAME = "check.json"
FIG4_MODEL_FILENAME = "fig4_model.csv"
FIG4_TRAIN_FILENAME = "fig4_train.csv"
FIG5_STATE_FILENAME = "fig5_state.csv"
FIG5_TIME_FILENAME = "fig5_time.csv"
SCENARIO_RESOLVED_FILENAME = "scenario.resolved.json"
