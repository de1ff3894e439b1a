"""Linear continuous logic on finite metric structures, executed exactly.

Formulas take rational truth values on finite metric structures; charges
(finitely additive probability weights) average families of structures into
ultramean and powermean quotients.  Everything downstream of parsing is
exact rational arithmetic: evaluation, quotient metrics, the mean identity
for linear formulas, type vectors, convex-hull certificates, and Chebyshev
fitting by exact LP.  Metric p-th roots at p>1 are the one approximate
surface and are labeled as such.
"""

from .approx import FitResult, TheoryPoint, build_theory_points, chebyshev_fit, check_preserved
from .charge import (
    Charge,
    convex_combine,
    fubini_check,
    integrate,
    is_extreme,
    load_charge,
    p_norm,
    product,
    pushforward,
)
from .convexlp import LinearProgram, LPResult, solve
from .errors import (
    CapExceededError,
    DomainError,
    EvalError,
    FormatError,
    MeanLogicError,
    NotLinearError,
    ParseError,
)
from .formula import (
    FragmentSpec,
    enumerate_fragment,
    evaluate,
    free_variables,
    infer_gauge,
    is_linear,
    parse,
    require_linear,
    unparse,
)
from .kernel import backend_name, compiled_available, evaluate_batch
from .mean import (
    CheckReport,
    CheckRow,
    MeanStructure,
    compose_check,
    convex_combination,
    diagonal_check,
    los_pointmass_check,
    mean_to_json,
    powermean,
    ultramean,
    verify_mean_theorem,
)
from .signature import FunctionSymbol, Modulus, RelationSymbol, Signature, modulus_combine
from .structure import (
    FiniteStructure,
    PNorm,
    ValidationReport,
    load_structure,
    save_structure,
    structure_from_json,
    structure_to_json,
    validate_structure,
)
from .typespace import (
    Fragment,
    GameState,
    GameVerdict,
    TypeVector,
    back_and_forth,
    equiv_check,
    extreme_types,
    realize_convex_type,
    realized_types,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "Charge",
    "CheckReport",
    "CheckRow",
    "DomainError",
    "EvalError",
    "FiniteStructure",
    "FitResult",
    "FormatError",
    "Fragment",
    "FragmentSpec",
    "FunctionSymbol",
    "GameState",
    "GameVerdict",
    "LPResult",
    "LinearProgram",
    "MeanLogicError",
    "MeanStructure",
    "Modulus",
    "NotLinearError",
    "PNorm",
    "ParseError",
    "RelationSymbol",
    "Signature",
    "TheoryPoint",
    "TypeVector",
    "ValidationReport",
    "back_and_forth",
    "backend_name",
    "build_theory_points",
    "chebyshev_fit",
    "check_preserved",
    "compiled_available",
    "compose_check",
    "convex_combination",
    "convex_combine",
    "diagonal_check",
    "enumerate_fragment",
    "equiv_check",
    "evaluate",
    "evaluate_batch",
    "extreme_types",
    "free_variables",
    "fubini_check",
    "infer_gauge",
    "integrate",
    "is_extreme",
    "is_linear",
    "load_charge",
    "load_structure",
    "los_pointmass_check",
    "mean_to_json",
    "modulus_combine",
    "p_norm",
    "parse",
    "powermean",
    "product",
    "pushforward",
    "realize_convex_type",
    "realized_types",
    "require_linear",
    "save_structure",
    "solve",
    "structure_from_json",
    "structure_to_json",
    "ultramean",
    "unparse",
    "validate_structure",
    "verify_mean_theorem",
]
