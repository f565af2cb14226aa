"""Algebraic multi-fault signatures: symbolic precomputation and numeric diagnosis."""

__version__ = "0.1.0"
