"""Random and named tripartite states, projectors and the Weyl unitary basis."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor import DEFAULT_TOL, DensityMatrix, DimensionError, ToleranceConfig, check_dims, hermitize

KINDS = (
    "haar-pure",
    "induced-mixed",
    "product-AB-C",
    "product-A-BC",
    "classical-diagonal",
    "ghz",
    "maximally-mixed",
    "file",
)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """64-bit seed for one trial, derived from the campaign's master seed.

    Depends only on ``(master_seed, trial_index)`` so the order in which
    trials are executed cannot change their inputs.
    """
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix,
    with the phases of R's diagonal absorbed into Q."""
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def haar_state_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in C^d."""
    v = _ginibre(rng, d, 1)[:, 0]
    return v / np.linalg.norm(v)


def induced_state(d: int, ancilla: int, rng: np.random.Generator) -> np.ndarray:
    """Reduced state of a Haar-random pure state on C^d (x) C^ancilla.

    The rank is ``min(d, ancilla)``; larger ancillas give better conditioned
    full-rank states.
    """
    if ancilla < 1:
        raise ValueError(f"ancilla dimension must be >= 1, got {ancilla}")
    psi = haar_state_vector(d * ancilla, rng).reshape(d, ancilla)
    rho = psi @ psi.conj().T
    return hermitize(rho / np.trace(rho).real).matrix


def pure_to_state(psi: np.ndarray, d: int) -> np.ndarray:
    """Trace the ancilla out of an amplitude vector on C^d (x) C^r."""
    g = np.asarray(psi, dtype=complex).reshape(d, -1)
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real).matrix


@dataclass(frozen=True)
class StateSpec:
    """Recipe for one state.

    ``rank`` applies to ``induced-mixed`` only; ``path`` to ``file`` only.
    """

    kind: str
    dims: tuple[int, ...]
    seed: int = 0
    rank: int | None = None
    path: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", check_dims(self.dims))
        if self.kind not in KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}; choose from {KINDS}")
        total = math.prod(self.dims)
        if self.kind == "induced-mixed":
            if self.rank is None or not 1 <= self.rank <= total:
                raise ValueError(f"induced-mixed rank must lie in [1, {total}], got {self.rank}")
        if self.kind == "ghz" and len(set(self.dims)) != 1:
            raise ValueError(f"ghz requires equal subsystem dimensions, got {list(self.dims)}")
        if self.kind in ("product-AB-C", "product-A-BC") and len(self.dims) != 3:
            raise ValueError(f"{self.kind} requires exactly three subsystems")
        if self.kind == "file" and self.path is None:
            raise ValueError("file kind requires a path")


def generate(spec: StateSpec, tol: ToleranceConfig = DEFAULT_TOL) -> DensityMatrix:
    """Build the state described by ``spec``; deterministic in ``spec.seed``."""
    dims = spec.dims
    total = math.prod(dims)
    rng = make_rng(spec.seed)

    if spec.kind == "haar-pure":
        rho = induced_state(total, 1, rng)
    elif spec.kind == "induced-mixed":
        rho = induced_state(total, spec.rank, rng)
    elif spec.kind == "product-AB-C":
        dab, dc = dims[0] * dims[1], dims[2]
        rho = np.kron(induced_state(dab, dab, rng), induced_state(dc, dc, rng))
    elif spec.kind == "product-A-BC":
        da, dbc = dims[0], dims[1] * dims[2]
        rho = np.kron(induced_state(da, da, rng), induced_state(dbc, dbc, rng))
    elif spec.kind == "classical-diagonal":
        rho = np.diag(rng.dirichlet(np.ones(total))).astype(complex)
    elif spec.kind == "ghz":
        d = dims[0]
        psi = np.zeros(total, dtype=complex)
        # |jj...j> sits at index j * (1 + d + d^2 + ...)
        step = sum(d**k for k in range(len(dims)))
        psi[np.arange(d) * step] = 1 / math.sqrt(d)
        rho = np.outer(psi, psi.conj())
    elif spec.kind == "maximally-mixed":
        rho = np.eye(total, dtype=complex) / total
    else:
        state = read_state(spec.path, tol)
        if state.dims != dims:
            raise DimensionError(f"state file has dims {list(state.dims)}, spec says {list(dims)}")
        return state
    return DensityMatrix(rho, dims, tol)


def random_projector(d: int, rank: int, seed: int | np.random.Generator) -> np.ndarray:
    """Orthogonal projector onto a Haar-random ``rank``-dimensional subspace of C^d.

    ``rank = 0`` gives the zero projector.
    """
    if not 0 <= rank <= d:
        raise ValueError(f"projector rank must lie in [0, {d}], got {rank}")
    if rank == d:
        return np.eye(d, dtype=complex)
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    v = haar_unitary(d, rng)[:, :rank]
    return hermitize(v @ v.conj().T).matrix


@dataclass(frozen=True)
class UnitaryBasis:
    elements: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return self.elements[0].shape[0]


def weyl_basis(d: int) -> UnitaryBasis:
    """Clock-and-shift basis ``{X^a Z^b}`` of the d x d matrices.

    ``X|j> = |j+1 mod d>`` and ``Z = diag(w^j)`` with ``w = exp(2 pi i / d)``;
    the d^2 elements satisfy ``Tr(U_i U_j^dagger) = d delta_ij``.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    elements = []
    for a in range(d):
        xa = np.linalg.matrix_power(shift, a)
        for b in range(d):
            elements.append(xa @ np.linalg.matrix_power(clock, b))
    return UnitaryBasis(tuple(elements))


# -- state files ---------------------------------------------------------

def format_real(x: float) -> str:
    """17 significant digits; enough to round-trip any double."""
    return format(float(x), ".17g")


def write_state(state: DensityMatrix | np.ndarray, path: str | Path,
                dims: Sequence[int] | None = None) -> None:
    """Write ``{"dims": [...], "matrix": [[re, im], ...]}`` (row-major)."""
    if isinstance(state, DensityMatrix):
        matrix, dims = state.matrix, state.dims
    else:
        matrix = np.asarray(state, dtype=complex)
        if dims is None:
            dims = (matrix.shape[0],)
    entries = ", ".join(
        f"[{format_real(z.real)}, {format_real(z.imag)}]" for z in np.ravel(matrix)
    )
    text = f'{{"dims": [{", ".join(str(int(d)) for d in dims)}], "matrix": [{entries}]}}\n'
    Path(path).write_text(text)


def read_state(path: str | Path, tol: ToleranceConfig = DEFAULT_TOL) -> DensityMatrix:
    doc = json.loads(Path(path).read_text())
    try:
        dims = check_dims(doc["dims"])
        pairs = np.asarray(doc["matrix"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed state file {path}: {exc}") from exc
    total = math.prod(dims)
    if pairs.shape != (total * total, 2):
        raise DimensionError(f"state file {path}: expected {total * total} [re, im] pairs")
    matrix = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(total, total)
    return DensityMatrix(matrix, dims, tol)
