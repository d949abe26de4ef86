"""Moving target defense analysis for DC power-system state estimation."""

__version__ = "0.1.0"

from .attack import (  # noqa: E402
    SpaceReport,
    StateInjection,
    identify_injection,
    is_stealthy,
    make_attack,
    security_factor,
    stealthy_basis,
    stealthy_family_3bus,
)
from .errors import (  # noqa: E402
    CaseParseError,
    IdentificationError,
    InfeasibleError,
    MtdError,
    ObservabilityError,
    PlanError,
    ValidationError,
)
from .estimation import (  # noqa: E402
    BadDataDetector,
    NoiseModel,
    StateEstimator,
    bdd_threshold,
    detect,
    estimate_state,
    residual_norm,
)
from .grid import (  # noqa: E402
    Branch,
    Generator,
    GridCase,
    MeasurementModel,
    dump_case,
    load_case,
    measurement_matrix,
    parse_case,
    parse_matpower,
)
from .mtd import (  # noqa: E402
    GammaTracker,
    PerturbationPlan,
    apply_plan,
    classify_case,
    completeness_check,
    delta_gamma,
    delta_H,
    lambda_invariance_scan,
    security_set,
)
from .opf import OpfProblem, OpfSolution, solve_dc_opf  # noqa: E402
from .planner import PlannerConfig, PlannerResult, compare_plan, plan_branches  # noqa: E402
