"""Symbolic coefficient expressions: AST, parser, calculus and zero testing."""

from .calculus import bind, derive_multi, eval_jet, eval_series, evaluate, substitute, symbolic_derive
from .nodes import (
    ONE,
    X1,
    X2,
    X3,
    X4,
    ZERO,
    Add,
    Const,
    Div,
    Exp,
    Expression,
    Ln,
    Mul,
    Neg,
    Param,
    Pow,
    Sub,
    Var,
    as_expression,
    exp,
    free_parameters,
    ln,
    to_text,
    variables,
)
from .parser import parse_expression
from .zerotest import (
    NONZERO_VERDICT,
    UNKNOWN_VERDICT,
    ZERO_VERDICT,
    ZeroVerdict,
    is_zero,
    polynomial_expression,
    polynomial_terms,
)

__all__ = [
    "Add", "Const", "Div", "Exp", "Expression", "Ln", "Mul", "Neg", "Param", "Pow", "Sub", "Var",
    "X1", "X2", "X3", "X4", "ONE", "ZERO",
    "as_expression", "bind", "derive_multi", "eval_jet", "eval_series", "evaluate", "exp",
    "free_parameters", "is_zero", "ln", "parse_expression", "substitute", "symbolic_derive",
    "polynomial_expression", "polynomial_terms", "to_text", "variables", "ZeroVerdict", "ZERO_VERDICT", "NONZERO_VERDICT", "UNKNOWN_VERDICT",
]
