import os


ROOT_DIR = os.path.dirname(os.path.abspath(__file__))

VERSION = "0.1.0"

# ready-to-run configurations shipped with the repository
EXAMPLE_CONF_RELATIVE_DIR = "../../conf/examples"
EXAMPLE_CONF_DIR = os.path.join(ROOT_DIR, EXAMPLE_CONF_RELATIVE_DIR)

# deterministic fuzzing
DEFAULT_SEED = 20_240_917

# desk-scale envelope
MAX_TOTAL_DIMENSION = 8
MAX_GAMMA_DIMENSION = 8
MIN_GRID_SIZE = 4
MAX_LATTICE_DIMENSION = 20_000

# numerical thresholds
DEGENERACY_THRESHOLD = 1e-12
ORTHOGONALITY_TOLERANCE = 1e-10
QUATERNION_SIGN_TOLERANCE = 1e-12
GLUING_TOLERANCE = 1e-9
COCYCLE_TOLERANCE = 1e-9
PARTITION_TOLERANCE = 1e-12
FINSLER_TOLERANCE = 1e-9
FINSLER_LAMBDAS = (0.5, 2.0, 3.0)

# default tolerances for report invariant checks
DEFAULT_TOLERANCES = {
    "symmetry": 1e-12,
    "torsion": 1e-10,
    "compatibility": 1e-8,
    "distortion": 1e-6,
    "frame": 1e-12,
    "clifford": 1e-13,
    "symbol": 1e-12,
    "almost_complex": 1e-10,
    "anti_hermitian": 1e-10,
    "lichnerowicz": 1e-10,
    "chern_real": 1e-10,
    "integrality": 1e-9,
}

# report float formatting
REPORT_FLOAT_PRECISION = 12  # %.12e

# geodesic integration defaults
DEFAULT_GEODESIC_STEPS = 200
DEFAULT_GEODESIC_TAU = 1.0
