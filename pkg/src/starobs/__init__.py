"""Exact-arithmetic workbench for deformation obstructions of commuting systems.

Everything is built on rational-coefficient polynomials: polyvector
fields with the Schouten bracket, Hochschild cochains as
polydifferential operators, truncated star products with gauge actions,
and the order-by-order procedure that either trivializes a product on a
commutative subalgebra or certifies the obstruction class blocking it.
"""

from .linsolve import LinearSolveResult, solve_sparse
from .multivec import (
    Polyvector,
    RelativeClass,
    d_hor,
    d_pi,
    hamiltonian_field,
    jacobi_check,
    poisson_bracket,
    schouten_bracket,
    wedge,
)
from .obstruction import (
    OBSTRUCTED,
    TRIVIALIZED,
    UNDECIDED,
    Bounds,
    CascadeReport,
    ExactnessResult,
    GaugeStepResult,
    IntegrableSystem,
    ObstructionReport,
    OrderRecord,
    ValidationReport,
    cocycle_cascade_check,
    eliminate_to_order,
    exactness_solve,
    gauge_step,
    lift_witness,
    obstruction_class,
    validate_system,
)
from .poly import (
    Polynomial,
    PolynomialParseError,
    TruncatedSeries,
    format_fraction,
    parse_polynomial,
)
from .polydiff import (
    PolyDiffOp,
    cup,
    generator_monomials,
    gerst_bracket,
    gerst_circ,
    hkr_to_cochain,
    hochschild_d,
    restricted_values,
    vanishes_on_generators,
)
from .star import (
    ExtensionResult,
    FormalDiffeo,
    StarProduct,
    compose_diffeo,
    extend_one_order,
    gauge_transform,
    invert_diffeo,
    moyal_star,
)

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "CascadeReport",
    "ExactnessResult",
    "ExtensionResult",
    "FormalDiffeo",
    "GaugeStepResult",
    "IntegrableSystem",
    "LinearSolveResult",
    "OBSTRUCTED",
    "ObstructionReport",
    "OrderRecord",
    "PolyDiffOp",
    "Polynomial",
    "PolynomialParseError",
    "Polyvector",
    "RelativeClass",
    "StarProduct",
    "TRIVIALIZED",
    "TruncatedSeries",
    "UNDECIDED",
    "ValidationReport",
    "cocycle_cascade_check",
    "compose_diffeo",
    "cup",
    "d_hor",
    "d_pi",
    "eliminate_to_order",
    "exactness_solve",
    "extend_one_order",
    "format_fraction",
    "gauge_step",
    "gauge_transform",
    "generator_monomials",
    "gerst_bracket",
    "gerst_circ",
    "hamiltonian_field",
    "hkr_to_cochain",
    "hochschild_d",
    "invert_diffeo",
    "jacobi_check",
    "lift_witness",
    "moyal_star",
    "obstruction_class",
    "parse_polynomial",
    "poisson_bracket",
    "restricted_values",
    "schouten_bracket",
    "solve_sparse",
    "validate_system",
    "vanishes_on_generators",
    "wedge",
]
