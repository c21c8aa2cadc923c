from enum import Enum, IntEnum

# Normalized cone margins within this band are classified as Boundary.
STRICT_TOL = 1e-9
# Smallest admissible eigenvalue of an SPD point.
PD_FLOOR = 1e-12

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
DEFAULT_ESCAPE_RADIUS = 1e6
FD_STEP_SCALE = 1e-6

NNLS_RESIDUAL_TOL = 1e-10
SEMICONTINUITY_SLACK = 0.05
BOUNDARY_MAX_ITER = 200

SEARCH_TARGET_RADIUS = 1e-3
SEARCH_MAX_STEPS = 100_000

EPS_CONV = 1e-6
RECURRENCE_TOL = 1e-4
OMEGA_T_MAX = 50.0
OMEGA_WINDOW = 5.0
OMEGA_N_TAIL = 64

EQUILIBRIUM_RESIDUAL_TOL = 1e-10
MERGE_RADIUS = 1e-6

MAX_FOLIATION_SHRINKS = 10
MAX_CONDITION_NUMBER = 1e6
FOLIATION_SHRINK = 0.5
DEFAULT_N_LINES = 101
DEFAULT_N_POINTS = 201
REFINEMENT_LEVELS = (1, 2, 4)
REFINEMENT_STRIDE = 10
ORDER_SUBSAMPLE = 0.05

SCHEMA_VERSION = "1.0"


class ManifoldKind(Enum):
    """Chart representations of the manifold."""
    EUCLIDEAN = "euclidean"
    SPD = "spd"
    CUSTOM_CHART = "custom_chart"


class TransportRule(Enum):
    """Rules for the linear transport Γ(x1, x2) between tangent spaces."""
    IDENTITY = "identity"
    SPD_CONGRUENCE = "spd_congruence"
    CUSTOM_LINEAR = "custom_linear"


class ConeVariant(Enum):
    ORTHANT = "orthant"
    POLYHEDRAL_HALFSPACES = "halfspaces"
    POLYHEDRAL_GENERATORS = "generators"
    SECOND_ORDER = "second_order"
    PSD = "psd"


class ConeFieldVariant(Enum):
    CONSTANT = "constant"
    TRANSPORTED = "transported"
    CUSTOM_CHART = "custom_chart"


class MembershipClass(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class DPVerdict(Enum):
    """Verdicts of the sampled differential positivity check."""
    SDP_CONSISTENT = "sdp_consistent"
    DP_CONSISTENT = "dp_consistent"
    VIOLATED = "violated"


class TrajectoryStatus(Enum):
    FINISHED = "finished"
    ESCAPED = "escaped"


class StabilityTag(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    SADDLE = "saddle"
    CENTER = "center"
    DEGENERATE = "degenerate"


class OrderRelation(Enum):
    STRICTLY_LESS = "strictly_less"
    LESS = "less"
    INCOMPARABLE = "incomparable"
    UNDECIDED = "undecided"


class OracleKind(Enum):
    ANALYTIC_CONSTANT = "analytic_constant"
    LOEWNER = "loewner"
    CURVE_SEARCH = "curve_search"


class OmegaClass(Enum):
    CONVERGED_TO = "converged_to"
    PERIODIC_ORBIT = "periodic_orbit"
    ESCAPED = "escaped"
    UNDECIDED = "undecided"


class Outcome(Enum):
    """Three-valued outcome of a single property check."""
    PASS = "pass"
    FAIL = "fail"
    UNDECIDED = "undecided"


class Subcommand(Enum):
    VERIFY_DP = "verify-dp"
    ORDER = "order"
    OMEGA = "omega"
    DICHOTOMY = "dichotomy"
    SUITE = "suite"
    CENSUS = "census"
    REPORT = "report"


class ExitCode(IntEnum):
    OK = 0
    PROPERTY_FAILURE = 1
    CONFIG_ERROR = 2
    NUMERIC_ERROR = 3


class SampleClass(Enum):
    """Census classification of one sample by its ω-limit set."""
    CONVERGENT = "convergent"
    SADDLE_CONVERGENT = "saddle_convergent"
    PERIODIC = "periodic"
    ESCAPED = "escaped"
    UNDECIDED = "undecided"
