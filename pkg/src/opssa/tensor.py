"""Dense tensor-product linear algebra on finite-dimensional subsystems.

Subsystem ordering is fixed: factor 0 is A, 1 is B, 2 is C, and matrix
indices run lexicographically over ``(a, b, c)`` with the last factor
varying fastest (the ``np.kron`` convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_TOTAL_DIM = 4096


class DimensionError(ValueError):
    """Operator shape does not agree with the declared subsystem dimensions."""


class HermiticityError(ValueError):
    """Input expected to be Hermitian is not, beyond tolerance."""


class NegativeEigenvalueError(ValueError):
    """Input expected to be PSD has an eigenvalue below ``-psd_tol``."""


@dataclass(frozen=True)
class ToleranceConfig:
    """Named numerical thresholds shared by every check in the package."""

    support_cutoff_rel: float = 1e-12
    psd_tol: float = 1e-9
    match_tol: float = 1e-9
    convexity_tol: float = 1e-9
    hermiticity_tol: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("support_cutoff_rel", "psd_tol", "match_tol",
                     "convexity_tol", "hermiticity_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    def psd_slack(self, matrix: np.ndarray) -> float:
        # Relative slack: psd_tol * max(1, ||H||_F).
        return self.psd_tol * max(1.0, float(np.linalg.norm(matrix)))


DEFAULT_TOL = ToleranceConfig()


def check_dims(dims: Iterable[int]) -> tuple[int, ...]:
    """Validate a dimension list and return it as a tuple of ints."""
    out = tuple(int(d) for d in dims)
    if not out:
        raise DimensionError("dimension list is empty")
    if any(d < 1 for d in out):
        raise DimensionError(f"subsystem dimensions must be >= 1, got {list(out)}")
    if math.prod(out) > MAX_TOTAL_DIM:
        raise DimensionError(f"total dimension {math.prod(out)} exceeds {MAX_TOTAL_DIM}")
    return out


def _check_square(matrix: np.ndarray, side: int | None = None) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if side is not None and m.shape[0] != side:
        raise DimensionError(f"matrix side {m.shape[0]} does not match dimension product {side}")
    return m


def _check_subset(indices: Iterable[int], n: int) -> tuple[int, ...]:
    idx = tuple(sorted({int(i) for i in indices}))
    for i in idx:
        if not 0 <= i < n:
            raise DimensionError(f"subsystem index {i} out of range for {n} subsystems")
    return idx


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, trace-one matrix tagged with subsystem dimensions."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    tol: ToleranceConfig = field(default=DEFAULT_TOL, compare=False, repr=False)

    def __post_init__(self) -> None:
        dims = check_dims(self.dims)
        m = np.array(_check_square(self.matrix, math.prod(dims)), dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

        asym = np.linalg.norm(m - m.conj().T)
        if asym > self.tol.hermiticity_tol:
            raise HermiticityError(f"density matrix not Hermitian (defect {asym:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > self.tol.match_tol:
            raise ValueError(f"density matrix trace {tr!r} differs from 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -self.tol.psd_tol:
            raise NegativeEigenvalueError(f"density matrix has eigenvalue {lo:.3e}")

    @property
    def total(self) -> int:
        return self.matrix.shape[0]

    def marginal(self, keep: Iterable[int]) -> "DensityMatrix":
        """Reduced state on the subsystems in ``keep``."""
        keep = _check_subset(keep, len(self.dims))
        traced = [i for i in range(len(self.dims)) if i not in keep]
        reduced = partial_trace(self.matrix, self.dims, traced)
        return DensityMatrix(hermitize(reduced).matrix, tuple(self.dims[i] for i in keep), self.tol)


@dataclass(frozen=True)
class HermitianOperator:
    """Exactly Hermitian matrix with the Frobenius norm of the anti-Hermitian
    part that was dropped to make it so."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    defect: float = 0.0

    def __post_init__(self) -> None:
        dims = check_dims(self.dims)
        m = np.array(_check_square(self.matrix, math.prod(dims)), dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "defect", float(self.defect))


def partial_trace(matrix: np.ndarray, dims: Sequence[int], traced: Iterable[int]) -> np.ndarray:
    """Trace out the subsystems listed in ``traced``.

    Returns the operator on the remaining factors, in their original order.
    Tracing every factor gives a 1x1 matrix holding the full trace.
    """
    dims = check_dims(dims)
    m = _check_square(matrix, math.prod(dims))
    traced = _check_subset(traced, len(dims))
    n = len(dims)
    kept = [i for i in range(n) if i not in traced]

    tensor = m.reshape(dims + dims)
    row = list(range(n))
    col = [i if i in traced else n + i for i in range(n)]
    out = kept + [n + i for i in kept]
    reduced = np.einsum(tensor, row + col, out)
    side = math.prod(dims[i] for i in kept)
    return reduced.reshape(side, side)


def embed(op: np.ndarray, dims: Sequence[int], subsystems: Iterable[int]) -> np.ndarray:
    """Place ``op`` on ``subsystems`` and the identity on every other factor."""
    dims = check_dims(dims)
    sub = _check_subset(subsystems, len(dims))
    if not sub:
        raise DimensionError("embed needs at least one target subsystem")
    op = _check_square(op, math.prod(dims[i] for i in sub))
    n = len(dims)
    comp = [i for i in range(n) if i not in sub]

    full = np.kron(op, np.eye(math.prod(dims[i] for i in comp)))
    order = list(sub) + comp
    tensor = full.reshape([dims[i] for i in order] * 2)
    # axis k of the kron tensor holds factor order[k]; invert that map
    inv = [order.index(i) for i in range(n)]
    tensor = tensor.transpose(inv + [n + k for k in inv])
    side = math.prod(dims)
    return tensor.reshape(side, side)


def hermitize(matrix: np.ndarray, dims: Sequence[int] | None = None) -> HermitianOperator:
    """Return ``(M + M^dagger)/2`` along with ``||(M - M^dagger)/2||_F``."""
    m = _check_square(matrix)
    m = np.asarray(m, dtype=complex)
    herm = 0.5 * (m + m.conj().T)
    anti = 0.5 * (m - m.conj().T)
    if dims is None:
        dims = (m.shape[0],)
    return HermitianOperator(herm, tuple(dims), float(np.linalg.norm(anti)))


def support_log(
    rho: np.ndarray | DensityMatrix,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> tuple[HermitianOperator, np.ndarray]:
    """Spectral logarithm restricted to the support of a PSD matrix.

    Eigenvalues above ``support_cutoff_rel * lambda_max`` map to ``log``;
    the rest map to 0 and span the kernel of the returned support projector.
    """
    if isinstance(rho, DensityMatrix):
        m, dims = rho.matrix, rho.dims
    else:
        m = _check_square(rho)
        dims = (m.shape[0],)
    m = np.asarray(m, dtype=complex)

    asym = np.linalg.norm(m - m.conj().T) / 2
    if asym > tol.hermiticity_tol:
        raise HermiticityError(f"support_log input not Hermitian (defect {asym:.3e})")
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if evals[0] < -tol.psd_slack(m):
        raise NegativeEigenvalueError(f"support_log input has eigenvalue {evals[0]:.3e}")

    top = max(evals[-1], 0.0)
    on_support = evals > tol.support_cutoff_rel * top if top > 0 else np.zeros_like(evals, bool)
    logs = np.zeros_like(evals)
    logs[on_support] = np.log(evals[on_support])

    vs = evecs[:, on_support]
    log_m = (evecs * logs) @ evecs.conj().T
    proj = vs @ vs.conj().T
    return hermitize(log_m, dims), hermitize(proj).matrix


def von_neumann_entropy(rho: np.ndarray | DensityMatrix, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """-Tr(rho log rho) with the 0 log 0 = 0 convention."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    log_m, _ = support_log(rho, tol)
    return float(-np.trace(m @ log_m.matrix).real)


def min_eigenvalue(op: HermitianOperator | np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian operator."""
    m = op.matrix if isinstance(op, HermitianOperator) else _check_square(op)
    return float(np.linalg.eigvalsh(m)[0])


def frobenius_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """``<X, Y> = Tr(X Y^dagger)``."""
    x = _check_square(x)
    y = _check_square(y)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    # Tr(X Y^dagger) = sum_ij X_ij conj(Y_ij)
    return complex(np.vdot(y, x))
