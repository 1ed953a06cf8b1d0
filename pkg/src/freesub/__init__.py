"""Free product decompositions of amalgamated free products and subfactors.

Exact bookkeeping of rescalings ``Q_s`` and interpolated free group factors
``L(F_t)`` through a confluent rewrite system with derivation traces.
"""
from .algebra import (
    FSP,
    LF,
    Family,
    FactorAtom,
    FreeJoin,
    FreeProductForm,
    Rescale,
    ScaledAtom,
    exponent_semantics,
    make_form,
    pretty,
    term,
    validity_check,
)
from .decomposition import (
    Betas,
    cor32A_closed_form,
    prop21_decompose,
    prop31_decompose,
    thm_msub,
    thm_subfin,
    thm_subinf,
    thm_univ,
)
from .errors import (
    ArithmeticDomainError,
    ConvergenceError,
    DomainError,
    FreesubError,
    ValidationError,
    ValidityError,
)
from .lattice import BipartiteGraph, path_graph, pf_weights, square_from_inclusion
from .rewrite import normal_form, normalize, replay, rescale, solve_lambda_zero_excess
from .scalar import INF, FreeParam, Scalar, ScaleSequence
from .squares import CommutingSquareData, matrix_square, two_level_square

__version__ = "0.1.0"

__all__ = [
    "ArithmeticDomainError",
    "Betas",
    "BipartiteGraph",
    "CommutingSquareData",
    "ConvergenceError",
    "DomainError",
    "FSP",
    "FactorAtom",
    "Family",
    "FreeJoin",
    "FreeParam",
    "FreeProductForm",
    "FreesubError",
    "INF",
    "LF",
    "Rescale",
    "Scalar",
    "ScaleSequence",
    "ScaledAtom",
    "ValidationError",
    "ValidityError",
    "cor32A_closed_form",
    "exponent_semantics",
    "make_form",
    "matrix_square",
    "normal_form",
    "normalize",
    "path_graph",
    "pf_weights",
    "pretty",
    "prop21_decompose",
    "prop31_decompose",
    "replay",
    "rescale",
    "solve_lambda_zero_excess",
    "square_from_inclusion",
    "term",
    "thm_msub",
    "thm_subfin",
    "thm_subinf",
    "thm_univ",
    "two_level_square",
    "validity_check",
]
