"""Star-set reachability and safety verification for feed-forward networks.

Computes exact or over-approximate reachable sets of fully-connected
networks with parameterized piece-wise linear activations (ReLU, leaky
ReLU, hard tanh, hard sigmoid, unit step), decides safety properties,
constructs complete counter input sets, and checks local adversarial
robustness.  Networks load from NNET files; problems from a small JSON
format; a CLI wraps the batch workflow.
"""

__version__ = "0.1.0"

from .lp import (
    FEASIBILITY_TOL,
    OBJECTIVE_TOL,
    InteriorPoint,
    LpNumericalError,
    LpOutcome,
    LpStatus,
    Polyhedron,
    interior_point,
    is_feasible,
    solve,
)
from .star import DimBounds, EmptyStarError, InputAnchor, Star
from .relaxation import (
    ActivationKind,
    HardSigmoid,
    HardTanh,
    Identity,
    LeakyReLU,
    PiecewiseSpec,
    ReLU,
    UnitStep,
    apply_activation,
    approx_step,
    exact_step,
    hull_region,
    layer_step_approx,
    layer_step_exact,
    scalar_eval,
)
from .reachability import (
    DEFAULT_TIMEOUT,
    Layer,
    Network,
    ReachResult,
    ReachStats,
    ReachTimeout,
    reach_approx,
    reach_exact,
)
from .model_io import (
    Box,
    NnetMetadata,
    NnetParseError,
    ProblemFormatError,
    ProblemSpec,
    normalize_input_box,
    parse_nnet,
    parse_problem,
    serialize_nnet,
)
from .verifier import (
    RobustnessResult,
    StarLabelInfo,
    Verdict,
    check_local_robustness,
    check_safety,
    counter_input_set,
)

__all__ = [
    "__version__",
    "FEASIBILITY_TOL",
    "OBJECTIVE_TOL",
    "Polyhedron",
    "LpStatus",
    "LpOutcome",
    "LpNumericalError",
    "InteriorPoint",
    "solve",
    "is_feasible",
    "interior_point",
    "Star",
    "DimBounds",
    "InputAnchor",
    "EmptyStarError",
    "ActivationKind",
    "Identity",
    "ReLU",
    "LeakyReLU",
    "HardTanh",
    "HardSigmoid",
    "UnitStep",
    "PiecewiseSpec",
    "scalar_eval",
    "apply_activation",
    "exact_step",
    "approx_step",
    "hull_region",
    "layer_step_exact",
    "layer_step_approx",
    "Layer",
    "Network",
    "ReachResult",
    "ReachStats",
    "ReachTimeout",
    "DEFAULT_TIMEOUT",
    "reach_exact",
    "reach_approx",
    "Box",
    "NnetMetadata",
    "NnetParseError",
    "ProblemSpec",
    "ProblemFormatError",
    "parse_nnet",
    "serialize_nnet",
    "normalize_input_box",
    "parse_problem",
    "Verdict",
    "StarLabelInfo",
    "RobustnessResult",
    "check_safety",
    "counter_input_set",
    "check_local_robustness",
]
