"""Temporal-logic requirements: parsing and quantitative robustness."""

from .nodes import (
    AtomExpr,
    Formula,
    Predicate,
    Not,
    And,
    Or,
    Implies,
    Globally,
    Eventually,
    Trace,
)
from .parser import parse
from .semantics import formula_horizon, robustness, satisfied

__all__ = [
    "AtomExpr",
    "Formula",
    "Predicate",
    "Not",
    "And",
    "Or",
    "Implies",
    "Globally",
    "Eventually",
    "Trace",
    "parse",
    "formula_horizon",
    "robustness",
    "satisfied",
]
