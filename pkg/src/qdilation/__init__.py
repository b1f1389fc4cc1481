"""Dilations and p-variation of operator-valued quantum measures on finite-dimensional algebras."""

from .algebra import Algebra, AlgebraElement, op_norm, sample_unit_ball, sup_over_ball
from .cpmaps import (
    KrausMap,
    cb_norm_cp,
    choi,
    kraus_from_choi,
    left_mult_pvar_check,
    random_cp_map,
    schatten_norm,
    stinespring,
    two_variation_bound_check,
)
from .dilation import (
    ConcreteDilation,
    build_elementary_space,
    elementary_norm,
    induced_dilation_norm,
    jordan_check,
    map_S,
    map_T,
    map_V,
    verify_dilation,
)
from .errors import ContractError, MeasureLookupError, StructuralError, UnderdeterminedError
from .measure import (
    OperatorMap,
    QuantumMeasure,
    check_additivity,
    extension_norm_bracket,
    gleason_extend,
    measure_norm,
    random_operator_map,
    tabulate,
)
from .projection import Projection, as_projection, is_orthogonal, join, meet, random_orthogonal_partition
from .pvariation import OrthoTree, PVarEstimate, pv_dilation_norm, pvar_estimate, pvar_oracle_abelian

__version__ = "0.1.0"

__all__ = [
    "Algebra",
    "AlgebraElement",
    "ConcreteDilation",
    "ContractError",
    "KrausMap",
    "MeasureLookupError",
    "OperatorMap",
    "OrthoTree",
    "PVarEstimate",
    "Projection",
    "QuantumMeasure",
    "StructuralError",
    "UnderdeterminedError",
    "as_projection",
    "build_elementary_space",
    "cb_norm_cp",
    "check_additivity",
    "choi",
    "elementary_norm",
    "extension_norm_bracket",
    "gleason_extend",
    "induced_dilation_norm",
    "is_orthogonal",
    "join",
    "jordan_check",
    "kraus_from_choi",
    "left_mult_pvar_check",
    "map_S",
    "map_T",
    "map_V",
    "measure_norm",
    "meet",
    "op_norm",
    "pv_dilation_norm",
    "pvar_estimate",
    "pvar_oracle_abelian",
    "random_cp_map",
    "random_operator_map",
    "random_orthogonal_partition",
    "sample_unit_ball",
    "schatten_norm",
    "stinespring",
    "tabulate",
    "sup_over_ball",
    "two_variation_bound_check",
    "verify_dilation",
]
