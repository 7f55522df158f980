import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Algebra limits
MAX_GENERATORS = int(os.getenv("CLIFFORD_MAX_GENERATORS", "8"))
HARD_MAX_GENERATORS = 12
EXACT_MAX_GENERATORS = int(os.getenv("CLIFFORD_EXACT_MAX_GENERATORS", "4"))
TABLE_CACHE_SIZE = int(os.getenv("CLIFFORD_TABLE_CACHE_SIZE", "16"))

# Numerics
SERIES_TOL = float(os.getenv("CLIFFORD_SERIES_TOL", "1e-14"))
SERIES_MAX_TERMS = int(os.getenv("CLIFFORD_SERIES_MAX_TERMS", "200"))
SINGULAR_COND = float(os.getenv("CLIFFORD_SINGULAR_COND", "1e12"))
COMPARE_TOL = float(os.getenv("CLIFFORD_COMPARE_TOL", "1e-10"))
FD_STEP = float(os.getenv("CLIFFORD_FD_STEP", "1e-5"))
CONSERVATION_STEP = float(os.getenv("CLIFFORD_CONSERVATION_STEP", "1e-4"))

# Sampling
DEFAULT_SEED = int(os.getenv("CLIFFORD_SEED", "42"))
DEFAULT_POINTS = int(os.getenv("CLIFFORD_POINTS", "50"))
SAMPLE_BOX = float(os.getenv("CLIFFORD_SAMPLE_BOX", "1.0"))

# Fixture generation
GAUGE_AMPLITUDE = float(os.getenv("CLIFFORD_GAUGE_AMPLITUDE", "0.5"))
GAUGE_DEGREE = int(os.getenv("CLIFFORD_GAUGE_DEGREE", "2"))
ORTHO_AMPLITUDE = float(os.getenv("CLIFFORD_ORTHO_AMPLITUDE", "0.5"))

# Per-check tolerances; every campaign echoes the ones it used
DEFAULT_TOLERANCES = {
    "anticommutation": 1e-9,
    "trace": 1e-9,
    "pseudoscalar": 1e-10,
    "vector_identities": 1e-9,
    "gauge_scalar": 1e-9,
    "eigenvalue": 1e-9,
    "equivalence": 1e-9,
    "odd_reduction": 1e-10,
    "explicit_formula": 1e-9,
    "projector": 1e-9,
    "spin_connection": 1e-10,
    "defining_equation": 1e-8,
    "zero_curvature": 1e-8,
    "covariant_constancy": 1e-9,
    "ym_first": 1e-8,
    "ym_second": 1e-7,
    "conservation": 1e-5,
    "gauge_invariance": 1e-7,
    "round_trip": 1e-8,
    "finite_difference": 1e-5,
    "property_suite": 1e-7,
}

# Paths
BASE_DIR = Path(__file__).parent.parent
CONFIG_DIR = BASE_DIR / "configs"
OUTPUT_DIR = Path(os.getenv("CLIFFORD_OUTPUT_DIR", str(BASE_DIR / "reports")))

LOG_LEVEL = os.getenv("CLIFFORD_LOG_LEVEL", "INFO")
