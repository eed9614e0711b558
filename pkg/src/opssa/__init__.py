"""Numerical verification of the operator extension of strong subadditivity."""

from .modular import (
    HermiticityAnomaly,
    SupportViolation,
    conditional_mutual_information,
    modular_hamiltonian,
    proof_step_check,
    restricted_trace_witness,
    ssa_operator,
    twirl_A,
)
from .states import StateSpec, generate, random_projector, weyl_basis
from .tensor import (
    DensityMatrix,
    HermitianOperator,
    ToleranceConfig,
    embed,
    frobenius_inner,
    hermitize,
    min_eigenvalue,
    partial_trace,
    support_log,
)

__version__ = "0.1.0"
