"""
Constants and numerical defaults for veritas_py.
"""

# Environment variables
ENV_SEED = "VERITAS_SEED"
ENV_THREADS = "VERITAS_THREADS"
ENV_LOG_LEVEL = "VERITAS_LOG_LEVEL"
ENV_LOG_FILE = "VERITAS_LOG_FILE"

# Label spaces
MAX_CLASSES = 30
MIN_CLASSES = 2
DENSE_BPA_MAX_CLASSES = 12

# Volumes
PROBABILITY_TOLERANCE = 1e-6
SUBSET_SEPARATOR = "|"
DTYPE_F32 = "f32le"
DTYPE_U8 = "u8"
DTYPE_U32 = "u32le"
KIND_SCALAR = "scalar"
KIND_PROB = "prob"
KIND_MASK = "mask"
KIND_LABELSET = "labelset"

# Dempster-Shafer
BPA_TOLERANCE = 1e-9
# Dempster denominators at or below this count as complete contradiction
AGREEMENT_FLOOR = 1e-15

# Fusion
DEFAULT_EPSILON = 1e-3
DEFAULT_INCIDENT_THRESHOLD = 0.5

# Metrics
HD_PERCENTILE = 95.0
MARGIN_PERCENTILE = 95.0

# Intensity GMM
GMM_MIN_SAMPLES = 20
GMM_TOLERANCE = 1e-8
GMM_MAX_ITER = 500
GMM_SIGMA_FLOOR_RATIO = 1e-6

# Multi-atlas fallback
HEAT_ALPHA = 0.5
BSPLINE_ORDER = 3
GAUSS_SIGMA_MM = 20.0
GAUSS_TRUNCATE = 4.0
DELTA_GA_NEUROTYPICAL_WEEKS = 1
DELTA_GA_SPINA_BIFIDA_WEEKS = 3
DAYS_PER_WEEK = 7.0

# Atlas construction
TEMPORAL_SIGMA_DAYS = 3.0
ATLAS_INTENSITY_MEAN = 2000.0
ATLAS_INTENSITY_STD = 500.0
PROCRUSTES_TOLERANCE = 1e-10
PROCRUSTES_MAX_ITER = 500

# Relative slack on the per-iteration monotonicity checks
MONOTONE_RTOL = 1e-9

# Label-set losses
DEFAULT_DICE_EPSILON = 1e-5
DEFAULT_DICE_ALPHA = 2

# DRO
DEFAULT_W_MIN = 0.1
DEFAULT_W_MAX = 10.0
MAX_EXP_ARG = 700.0
