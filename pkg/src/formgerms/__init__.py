"""Type classification and differential invariants of 2-forms in four variables."""

from .analysis import (
    Germ,
    ProbeSettings,
    TypeVerdict,
    classify_type3_given_F,
    compute_A,
    compute_I,
    compute_omega,
    compute_phi,
    determine_type,
)
from .errors import (
    DegenerateFormError,
    FormGermError,
    FrameDegenerateError,
    OrderBudgetError,
    ParseError,
    TranscendenceError,
)
from .exterior import (
    ChartMap,
    DifferentialForm,
    VectorField,
    class_of_1form,
    exterior_derivative,
    interior_product,
    lie_bracket,
    pullback,
    rank_of_2form,
    wedge,
)
from .expr import is_zero, parse_expression, to_text
from .frame import (
    EquivalenceVerdict,
    build_frame,
    check_identities,
    decide_equivalence,
    invariant_signature,
    solve_T,
    solve_Z,
)
from .jets import EXACT, EXACT_EXP, FLOAT, TruncatedSeries
from .models import ModelSpec, check_system, coefficients, instantiate, solve_prop51

__all__ = [name for name in dir() if not name.startswith("_")]
