"""Computable machinery for graded nilpotent Lie groups with diagonal
derivations: exact BCH group law, Carnot-by-Carnot decomposition,
horizontal paths, biLipschitz shear maps, compatible expressions and the
shear-cocycle calculus, with sampling estimators at desk scale."""

from .algebra import (
    GradedAlgebra,
    LinearMap,
    Subspace,
    ValidationReport,
    bracket,
    center,
    is_ideal,
    layer_project,
    quotient,
    subalgebra_generated,
    subspace,
    validate_algebra,
)
from .group import (
    AffineMap,
    apply_affine,
    bch,
    compose_affine,
    conjugate_adjoint,
    dilate,
    invert_affine,
    is_graded_automorphism,
    quasi_dist,
    quasi_norm,
)
from .carnot import (
    CbCDecomposition,
    DecompositionError,
    HorizontalPath,
    bracket_expressions,
    cc_upper_bound,
    decompose,
    horizontal_connect,
    integrate_bracket_form,
    p_alpha_project,
)
from .shear import (
    ShearComponent,
    ShearMap,
    apply_shear,
    bilip_estimate,
    build_shear,
    component_from_exprs,
    holder_norm_estimate,
    k_function,
    lift,
    loop_test_membership,
    necessity_check,
)
from .maps import (
    CompatibleExpression,
    FiberMap,
    SimilarityPair,
    automorphism_check,
    chain_rule_check,
    cocycle_action,
    cocycle_identity_check,
    cocycle_of,
    compose,
    conjugate_by_shear,
    d_alpha,
    d_alpha_matrix,
    extract_compatible,
    fiber_auto,
    fiber_dilation,
    fiber_shear,
    fiber_translate,
    pansu_check,
    similarity_exponent_check,
    similarity_pair,
    solve_single_generator_fixed_point,
    verify_compatible,
)
from .catalog import (
    central_product,
    direct_product,
    fixture,
    fixture_names,
    load_algebra,
    save_algebra,
    sol_like,
)
from .rng import CounterRng, SamplerConfig

__all__ = [
    "GradedAlgebra",
    "LinearMap",
    "Subspace",
    "ValidationReport",
    "bracket",
    "center",
    "is_ideal",
    "layer_project",
    "quotient",
    "subalgebra_generated",
    "subspace",
    "validate_algebra",
    "AffineMap",
    "apply_affine",
    "bch",
    "compose_affine",
    "conjugate_adjoint",
    "dilate",
    "invert_affine",
    "is_graded_automorphism",
    "quasi_dist",
    "quasi_norm",
    "CbCDecomposition",
    "DecompositionError",
    "HorizontalPath",
    "bracket_expressions",
    "cc_upper_bound",
    "decompose",
    "horizontal_connect",
    "integrate_bracket_form",
    "p_alpha_project",
    "ShearComponent",
    "ShearMap",
    "apply_shear",
    "bilip_estimate",
    "build_shear",
    "component_from_exprs",
    "holder_norm_estimate",
    "k_function",
    "lift",
    "loop_test_membership",
    "necessity_check",
    "CompatibleExpression",
    "FiberMap",
    "SimilarityPair",
    "automorphism_check",
    "chain_rule_check",
    "cocycle_action",
    "cocycle_identity_check",
    "cocycle_of",
    "compose",
    "conjugate_by_shear",
    "d_alpha",
    "d_alpha_matrix",
    "extract_compatible",
    "fiber_auto",
    "fiber_dilation",
    "fiber_shear",
    "fiber_translate",
    "pansu_check",
    "similarity_exponent_check",
    "similarity_pair",
    "solve_single_generator_fixed_point",
    "verify_compatible",
    "central_product",
    "direct_product",
    "fixture",
    "fixture_names",
    "load_algebra",
    "save_algebra",
    "sol_like",
    "CounterRng",
    "SamplerConfig",
]

__version__ = "0.1.0"
