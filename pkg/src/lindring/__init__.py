"""Conserved quantities of translationally invariant Lindblad dynamics on spin-1/2 rings."""

__version__ = "0.1.0"

from .pauli import (
    LocalityReport,
    PauliOperator,
    anticommutator,
    commutator,
    format_operator,
    locality,
    parse_operator,
)
from .generators import (
    LindbladGenerator,
    basis_strings,
    kernel,
    superop_matrix,
)
from .rings import (
    CanonicalParams,
    canonical_form,
    check_conservation,
    classify_ising,
    global_conservation_residual,
    local_conservation_check,
)
from .obstruction import (
    DefinitenessReport,
    ObstructionMatrix,
    QuadraticForm,
    UnitalityWitness,
    assemble_C_2site,
    assemble_C_3site,
    certify_definiteness,
    closed_form_C_2site,
    conservation_forms,
    c2prime_diagnostics,
    family_grid,
    scan,
    unitality_forms,
    unitality_witness,
)
from .feasibility import (
    AffineConstraints,
    FeasibilityProblem,
    FeasibilityResult,
    build_affine_constraints,
    format_problem_file,
    generator_from_point,
    pack_point,
    parse_problem_file,
    search,
    unpack_point,
    verify_candidate,
)

__all__ = [
    "PauliOperator",
    "LocalityReport",
    "locality",
    "commutator",
    "anticommutator",
    "parse_operator",
    "format_operator",
    "LindbladGenerator",
    "basis_strings",
    "kernel",
    "superop_matrix",
    "CanonicalParams",
    "canonical_form",
    "classify_ising",
    "check_conservation",
    "global_conservation_residual",
    "local_conservation_check",
    "QuadraticForm",
    "ObstructionMatrix",
    "DefinitenessReport",
    "UnitalityWitness",
    "conservation_forms",
    "unitality_forms",
    "assemble_C_2site",
    "closed_form_C_2site",
    "assemble_C_3site",
    "certify_definiteness",
    "c2prime_diagnostics",
    "unitality_witness",
    "scan",
    "family_grid",
    "FeasibilityProblem",
    "FeasibilityResult",
    "AffineConstraints",
    "build_affine_constraints",
    "search",
    "verify_candidate",
    "pack_point",
    "unpack_point",
    "generator_from_point",
    "parse_problem_file",
    "format_problem_file",
    "__version__",
]
