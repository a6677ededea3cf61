"""Action representations of free products on their Cayley graphs.

Exact word arithmetic, finitely supported vectors and group-algebra
operators on l2 of a countable space, certified-from-below operator-norm
estimation, and the conjugation-averaging experiments built on top of them.
"""

from .groups import (
    INFINITE,
    DegenerateInputError,
    FreeProductPresentation,
    GroupElement,
    PresentationMismatchError,
    conjugate_sequence,
    element_order,
    first_syllable_in,
    free_group,
    free_product,
    invert,
    multiply,
    reduce,
)
from .spaces import (
    ActionSpace,
    BudgetExceededError,
    CayleySpace,
    FaithfulnessReport,
    OrbitDecomposition,
    faithfulness_check,
    orbit_decompose,
)
from .operators import (
    FormalOperator,
    NormBudget,
    NormEstimate,
    StateVector,
    adjoint,
    indicator_project,
    norm_lower_bound,
    op_apply,
    pi_apply,
    triangle_upper_bound,
)
from .dynamics import (
    CoefficientSequence,
    average_MJ,
    averaging_decay_report,
    build_Ta,
    canonical_trace,
    check_Wj_disjoint,
    finite_order_blowup,
    ideal_experiment,
    loxodromic_probe,
    pingpong_certificate,
    tracial_property_check,
    verify_panalytic,
)

__all__ = [
    "INFINITE",
    "DegenerateInputError",
    "FreeProductPresentation",
    "GroupElement",
    "PresentationMismatchError",
    "conjugate_sequence",
    "element_order",
    "first_syllable_in",
    "free_group",
    "free_product",
    "invert",
    "multiply",
    "reduce",
    "ActionSpace",
    "BudgetExceededError",
    "CayleySpace",
    "FaithfulnessReport",
    "OrbitDecomposition",
    "faithfulness_check",
    "orbit_decompose",
    "FormalOperator",
    "NormBudget",
    "NormEstimate",
    "StateVector",
    "adjoint",
    "indicator_project",
    "norm_lower_bound",
    "op_apply",
    "pi_apply",
    "triangle_upper_bound",
    "CoefficientSequence",
    "average_MJ",
    "averaging_decay_report",
    "build_Ta",
    "canonical_trace",
    "check_Wj_disjoint",
    "finite_order_blowup",
    "ideal_experiment",
    "loxodromic_probe",
    "pingpong_certificate",
    "tracial_property_check",
    "verify_panalytic",
]

__version__ = "0.1.0"
