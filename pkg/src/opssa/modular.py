"""Modular Hamiltonians and the operator form of strong subadditivity.

For a tripartite state rho on A (x) B (x) C the central object is

    T_C = Tr_AB[ rho (H_AB + H_BC - H_B - H_ABC) ],   H_X = -1 (x) log(rho_X),

a Hermitian operator on C whose trace is the conditional mutual information
I(A:C|B) and which is positive semidefinite for every state.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

import numpy as np

from .states import weyl_basis
from .tensor import (
    DEFAULT_TOL,
    DensityMatrix,
    DimensionError,
    HermitianOperator,
    ToleranceConfig,
    embed,
    hermitize,
    partial_trace,
    support_log,
    von_neumann_entropy,
)

A, B, C = 0, 1, 2
LABELS = {"A": A, "B": B, "C": C}


class SupportViolation(ValueError):
    """The state puts weight outside supp(rho_S) (x) 1 for some marginal S,
    where -log rho_S is formally infinite."""


class HermiticityAnomaly(ValueError):
    """An operator that is Hermitian in exact arithmetic came out with a
    larger anti-Hermitian part than roundoff can explain."""


def _require_tripartite(rho: DensityMatrix) -> None:
    if len(rho.dims) != 3:
        raise DimensionError(f"expected 3 subsystems (A, B, C), got dims {list(rho.dims)}")


def _subsystems(spec: str | Iterable[int], n: int) -> tuple[int, ...]:
    if isinstance(spec, str):
        try:
            idx = tuple(sorted({LABELS[ch] for ch in spec}))
        except KeyError as exc:
            raise ValueError(f"unknown subsystem label in {spec!r}") from exc
    else:
        idx = tuple(sorted({int(i) for i in spec}))
    if not idx:
        raise ValueError("subsystem set must be nonempty")
    if idx[-1] >= n or idx[0] < 0:
        raise DimensionError(f"subsystem set {idx} out of range for {n} subsystems")
    return idx


def _modular_parts(rho: DensityMatrix, subsystems: tuple[int, ...],
                   tol: ToleranceConfig) -> tuple[HermitianOperator, np.ndarray]:
    n = len(rho.dims)
    traced = [i for i in range(n) if i not in subsystems]
    marginal = partial_trace(rho.matrix, rho.dims, traced)
    log_m, support = support_log(hermitize(marginal).matrix, tol)
    h = embed(-log_m.matrix, rho.dims, subsystems)
    return HermitianOperator(h, rho.dims, log_m.defect), embed(support, rho.dims, subsystems)


def modular_hamiltonian(rho: DensityMatrix, subsystems: str | Iterable[int],
                        tol: ToleranceConfig = DEFAULT_TOL) -> HermitianOperator:
    """``-log(rho_S)`` on the subsystems S, tensored with the identity elsewhere.

    The logarithm is taken on the support of rho_S only (kernel maps to 0).
    """
    sub = _subsystems(subsystems, len(rho.dims))
    return _modular_parts(rho, sub, tol)[0]


def ssa_combination(rho: DensityMatrix, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """``K = H_AB + H_BC - H_B - H_ABC`` on the full space.

    Raises SupportViolation when rho is not supported inside
    ``supp(rho_S) (x) 1`` for one of the four marginals.
    """
    _require_tripartite(rho)
    k = np.zeros_like(rho.matrix)
    for sub, sign in (((A, B), 1.0), ((B, C), 1.0), ((B,), -1.0), ((A, B, C), -1.0)):
        h, support = _modular_parts(rho, sub, tol)
        leak = float(np.trace(rho.matrix @ (np.eye(rho.total) - support)).real)
        if leak > tol.match_tol:
            names = "".join("ABC"[i] for i in sub)
            raise SupportViolation(f"rho has weight {leak:.3e} outside supp(rho_{names})")
        k = k + sign * h.matrix
    return k


def ssa_operator(rho: DensityMatrix, tol: ToleranceConfig = DEFAULT_TOL) -> HermitianOperator:
    """The operator ``T_C = Tr_AB[rho K]`` on subsystem C.

    Each of the four terms is Hermitian in exact arithmetic, so the product is
    hermitized; an anti-Hermitian part above ``hermiticity_tol`` raises
    HermiticityAnomaly.
    """
    k = ssa_combination(rho, tol)
    t = hermitize(partial_trace(rho.matrix @ k, rho.dims, (A, B)), (rho.dims[C],))
    if t.defect > tol.hermiticity_tol:
        raise HermiticityAnomaly(f"T_C hermitization defect {t.defect:.3e}")
    return t


def conditional_mutual_information(rho: DensityMatrix, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC)`` in nats."""
    _require_tripartite(rho)

    def entropy(keep):
        traced = [i for i in range(3) if i not in keep]
        return von_neumann_entropy(hermitize(partial_trace(rho.matrix, rho.dims, traced)).matrix, tol)

    return entropy((A, B)) + entropy((B, C)) - entropy((B,)) - entropy((A, B, C))


def twirl_A(rho: DensityMatrix) -> DensityMatrix:
    """Average ``(U (x) 1) rho (U (x) 1)^dagger`` over the Weyl basis on A.

    The result equals ``1/d_A (x) rho_BC``.
    """
    _require_tripartite(rho)
    basis = weyl_basis(rho.dims[A])
    acc = np.zeros_like(rho.matrix)
    for u in basis.elements:
        big = embed(u, rho.dims, (A,))
        acc += big @ rho.matrix @ big.conj().T
    acc /= len(basis.elements)
    return DensityMatrix(hermitize(acc).matrix, rho.dims, rho.tol)


def maximally_mixed_A(rho: DensityMatrix) -> DensityMatrix:
    """``1/d_A (x) rho_BC`` built directly from the partial trace."""
    _require_tripartite(rho)
    da = rho.dims[A]
    rho_bc = partial_trace(rho.matrix, rho.dims, (A,))
    return DensityMatrix(hermitize(np.kron(np.eye(da) / da, rho_bc)).matrix, rho.dims, rho.tol)


def check_projector(p: np.ndarray, d: int, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.shape != (d, d):
        raise DimensionError(f"projector must be {d}x{d}, got shape {p.shape}")
    if np.linalg.norm(p - p.conj().T) > tol.match_tol or np.linalg.norm(p @ p - p) > tol.match_tol:
        raise ValueError("matrix is not an orthogonal projector")
    return p


class ProofStep(NamedTuple):
    lhs: float
    rhs: float
    lhs_original: float
    imag: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def proof_step_check(rho: DensityMatrix, projector: np.ndarray,
                     tol: ToleranceConfig = DEFAULT_TOL) -> ProofStep:
    """Both sides of the projector inequality behind the operator SSA bound.

        lhs = Tr[(1/d_A (x) rho_BC)(H_B - H_BC) P_C]
        rhs = Tr[rho (H_AB - H_ABC) P_C]

    with every H taken from rho. ``lhs_original`` is the same left side with
    rho in place of the twirled state; the two agree exactly because
    ``H_B - H_BC`` acts trivially on A. ``imag`` is the largest imaginary
    part discarded from the three traces.
    """
    _require_tripartite(rho)
    p = embed(check_projector(projector, rho.dims[C], tol), rho.dims, (C,))
    h = {sub: modular_hamiltonian(rho, sub, tol).matrix for sub in ((B,), (B, C), (A, B), (A, B, C))}
    twirled = maximally_mixed_A(rho)

    lhs = np.trace(twirled.matrix @ (h[(B,)] - h[(B, C)]) @ p)
    rhs = np.trace(rho.matrix @ (h[(A, B)] - h[(A, B, C)]) @ p)
    lhs_orig = np.trace(rho.matrix @ (h[(B,)] - h[(B, C)]) @ p)
    imag = max(abs(lhs.imag), abs(rhs.imag), abs(lhs_orig.imag))
    return ProofStep(float(lhs.real), float(rhs.real), float(lhs_orig.real), float(imag))


def restricted_trace_witness(rho: DensityMatrix, traced: str | Iterable[int],
                             tol: ToleranceConfig = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """``Tr_traced[rho K]`` without hermitization, and ``||X - X^dagger||_F``.

    ``traced="AB"`` is the Hermitian operator T_C. Tracing out only ``"A"``
    or only ``"B"`` generically gives a non-Hermitian operator on the
    remaining pair.
    """
    sub = _subsystems(traced, len(rho.dims))
    k = ssa_combination(rho, tol)
    x = partial_trace(rho.matrix @ k, rho.dims, sub)
    return x, float(np.linalg.norm(x - x.conj().T))


def local_unitary_C(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    """``(1 (x) 1 (x) u) rho (1 (x) 1 (x) u)^dagger``."""
    big = embed(u, rho.dims, (C,))
    return DensityMatrix(hermitize(big @ rho.matrix @ big.conj().T).matrix, rho.dims, rho.tol)

