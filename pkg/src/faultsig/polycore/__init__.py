"""Exact polynomial arithmetic, lex Groebner bases and an expression parser."""

from .groebner import (
    EliminationOrderError,
    GroebnerBasis,
    GroebnerBlowup,
    eliminate,
    groebner_basis,
    is_groebner,
    normal_form,
    reduce_by,
    s_polynomial,
)
from .order import MonomialOrder
from .parser import PolySyntaxError, UnknownVariableError, parse_poly
from .polynomial import Polynomial
from .universe import VarClass, VarUniverse

__all__ = [
    "EliminationOrderError",
    "GroebnerBasis",
    "GroebnerBlowup",
    "MonomialOrder",
    "PolySyntaxError",
    "Polynomial",
    "UnknownVariableError",
    "VarClass",
    "VarUniverse",
    "eliminate",
    "groebner_basis",
    "is_groebner",
    "normal_form",
    "parse_poly",
    "reduce_by",
    "s_polynomial",
]
