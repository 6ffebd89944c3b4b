"""Exact symbolic derivation of wave equations from Hamilton-Jacobi
dynamics, with numeric verification of every derived equation."""

from .rational import GaussianRational
from .symbols import Symbol, SymbolKind, constant, coordinate, field_symbol
from .expr import (
    Const,
    Deriv,
    Expr,
    FieldRef,
    HermPair,
    LogRef,
    PairProd,
    ParamRef,
    Power,
    Product,
    Sum,
    TrigFn,
    canonicalize,
    collect_by_degree,
    conjugate,
    const,
    differentiate,
    equal_up_to_factor,
    evaluate,
    exprs_equal,
    free_symbols,
    ref,
    substitute,
)
from .equations import Equation, MatchResult, VectorEquation, equations_match

__version__ = "0.1.0"

__all__ = [
    "GaussianRational",
    "Symbol",
    "SymbolKind",
    "constant",
    "coordinate",
    "field_symbol",
    "Const",
    "Deriv",
    "Expr",
    "FieldRef",
    "HermPair",
    "LogRef",
    "PairProd",
    "ParamRef",
    "Power",
    "Product",
    "Sum",
    "TrigFn",
    "canonicalize",
    "collect_by_degree",
    "conjugate",
    "const",
    "differentiate",
    "equal_up_to_factor",
    "evaluate",
    "exprs_equal",
    "free_symbols",
    "ref",
    "substitute",
    "Equation",
    "MatchResult",
    "VectorEquation",
    "equations_match",
    "__version__",
]
