"""Left/right multiplication superoperators and operator perspectives.

Matrices are vectorized row-major: entry (i, j) of an n x n matrix is
coordinate ``i * n + j``. In that convention ``X -> rho X`` is
``kron(rho, 1)`` and ``X -> X sigma`` is ``kron(1, sigma.T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .modular import SupportViolation
from .tensor import DEFAULT_TOL, DimensionError, ToleranceConfig, frobenius_inner, hermitize, support_log


class NotMultiplicationError(ValueError):
    """Superoperator is neither a left nor a right multiplication."""


def vectorize(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1)


def devectorize(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n)


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    n: int
    kind: str = "general"  # "left", "right" or "general"

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.n**2, self.n**2):
            raise DimensionError(f"superoperator on {self.n}x{self.n} matrices must be "
                                 f"{self.n**2}x{self.n**2}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.n, self.n):
            raise DimensionError(f"expected a {self.n}x{self.n} matrix, got {x.shape}")
        return devectorize(self.matrix @ vectorize(x), self.n)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix, self.n)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix - other.matrix, self.n)


def _square(m: np.ndarray, n: int | None) -> tuple[np.ndarray, int]:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise DimensionError(f"expected {n}x{n}, got {m.shape}")
    return m, m.shape[0]


def left_superop(rho: np.ndarray, n: int | None = None) -> Superoperator:
    """``L: X -> rho X``."""
    rho, n = _square(rho, n)
    return Superoperator(np.kron(rho, np.eye(n)), n, "left")


def right_superop(sigma: np.ndarray, n: int | None = None) -> Superoperator:
    """``R: X -> X sigma``."""
    sigma, n = _square(sigma, n)
    return Superoperator(np.kron(np.eye(n), sigma.T), n, "right")


def multiplication_factor(s: Superoperator, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[str, np.ndarray]:
    """Recover ``("left", rho)`` or ``("right", sigma)`` from the matrix of s.

    Detection uses only ``s.matrix``; the ``kind`` tag is not trusted.
    """
    n = s.n
    t = s.matrix.reshape(n, n, n, n)  # t[i, j, k, l]: (out row, out col, in row, in col)
    scale = max(1.0, float(np.linalg.norm(s.matrix)))
    rho = np.einsum("ijkj->ik", t) / n
    if np.linalg.norm(s.matrix - np.kron(rho, np.eye(n))) <= tol.match_tol * scale:
        return "left", rho
    sigma_t = np.einsum("ijil->jl", t) / n
    if np.linalg.norm(s.matrix - np.kron(np.eye(n), sigma_t)) <= tol.match_tol * scale:
        return "right", sigma_t.T
    raise NotMultiplicationError("superoperator is not a left or right multiplication")


def superop_log(s: Superoperator, tol: ToleranceConfig = DEFAULT_TOL) -> Superoperator:
    """Support-restricted spectral log of a left or right multiplication by a
    PSD matrix, taken directly on the n^2 x n^2 matrix."""
    kind, _ = multiplication_factor(s, tol)
    log_s, _ = support_log(s.matrix, tol)
    return Superoperator(log_s.matrix, s.n, kind)


def support_leak(rho: np.ndarray, sigma: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``Tr(rho (1 - supp sigma))``."""
    _, supp = support_log(sigma, tol)
    return float(np.trace(rho @ (np.eye(len(supp)) - supp)).real)


def perspective_xlogx(rho: np.ndarray, sigma: np.ndarray,
                      tol: ToleranceConfig = DEFAULT_TOL) -> Superoperator:
    """``g(L, R) = L log L - L log R``, i.e. ``X -> rho log(rho) X - rho X log(sigma)``.

    Built from superoperator algebra (products of L with the spectral logs
    of L and R).
    """
    rho, n = _square(rho, None)
    sigma, _ = _square(sigma, n)
    leak = support_leak(rho, sigma, tol)
    if leak > tol.match_tol:
        raise SupportViolation(f"supp(rho) not inside supp(sigma): leak {leak:.3e}")
    left, right = left_superop(rho), right_superop(sigma)
    g = left @ superop_log(left, tol) - left @ superop_log(right, tol)
    return Superoperator(g.matrix, n)


def quadratic_form(g: Superoperator, o: np.ndarray) -> complex:
    """``<g(O), O>`` in the Frobenius inner product."""
    return frobenius_inner(g.apply(o), o)


def quasi_entropy(rho: np.ndarray, sigma: np.ndarray, o: np.ndarray,
                  tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``Tr(rho log(rho) O O^dagger - rho O log(sigma) O^dagger)`` through the
    perspective superoperator. With ``O = 1`` this is the relative entropy."""
    value = quadratic_form(perspective_xlogx(rho, sigma, tol), o)
    if abs(value.imag) > tol.match_tol * max(1.0, abs(value.real)):
        raise ValueError(f"quasi-entropy has imaginary part {value.imag:.3e}")
    return value.real


def quasi_entropy_trace(rho: np.ndarray, sigma: np.ndarray, o: np.ndarray,
                        tol: ToleranceConfig = DEFAULT_TOL) -> complex:
    """The same quantity evaluated as a plain matrix trace."""
    log_rho, _ = support_log(rho, tol)
    log_sigma, _ = support_log(sigma, tol)
    o = np.asarray(o)
    od = o.conj().T
    return complex(np.trace(rho @ log_rho.matrix @ o @ od - rho @ o @ log_sigma.matrix @ od))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    rho = np.asarray(rho, dtype=complex)
    return quasi_entropy(rho, sigma, np.eye(rho.shape[0]), tol)


# -- operator convex functions -------------------------------------------

def _xlogx_persp(lam, mu):
    # lam log lam - lam log mu; 0 when lam = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = lam * (np.log(lam) - np.log(mu))
    out = np.where(lam == 0, 0.0, out)
    return np.where((lam > 0) & (mu == 0), np.inf, out)


def _neglog_persp(lam, mu):
    # mu log mu - mu log lam; 0 when mu = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = mu * (np.log(mu) - np.log(lam))
    out = np.where(mu == 0, 0.0, out)
    return np.where((mu > 0) & (lam == 0), np.inf, out)


def _power_persp(t):
    def persp(lam, mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lam**t * mu ** (1 - t)
        out = np.where(lam == 0, 0.0, out)
        return np.where((lam > 0) & (mu == 0), np.inf, out)
    return persp


@dataclass(frozen=True)
class OperatorConvexF:
    """An operator convex function on (0, inf) with its perspective
    ``(lam, mu) -> f(lam / mu) mu`` extended to zero eigenvalues by limits.

    Infinite limits come back as ``inf``.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    perspective: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def __repr__(self) -> str:
        return f"OperatorConvexF({self.name})"


XLOGX = OperatorConvexF("xlogx", lambda x: x * np.log(x), _xlogx_persp)
NEGLOG = OperatorConvexF("neglog", lambda x: -np.log(x), _neglog_persp)
SQUARE = OperatorConvexF("square", lambda x: x**2, _power_persp(2.0))


def power(t: float) -> OperatorConvexF:
    """``x^t`` for ``t`` in (1, 2]."""
    t = float(t)
    if not 1 < t <= 2:
        raise ValueError(f"x^t is operator convex here only for t in (1, 2], got {t}")
    return OperatorConvexF(f"power({t:g})", lambda x: x**t, _power_persp(t))


def convex_function(name: str) -> OperatorConvexF:
    """Look up ``xlogx``, ``neglog``, ``square`` or ``power(t)``."""
    fixed = {"xlogx": XLOGX, "neglog": NEGLOG, "square": SQUARE}
    if name in fixed:
        return fixed[name]
    if name.startswith("power(") and name.endswith(")"):
        return power(float(name[6:-1]))
    raise ValueError(f"unknown operator convex function {name!r}")


def _clipped_eigh(m: np.ndarray, tol: ToleranceConfig) -> tuple[np.ndarray, np.ndarray]:
    m = hermitize(m).matrix
    evals, evecs = np.linalg.eigh(m)
    if evals[0] < -tol.psd_slack(m):
        raise ValueError(f"input is not PSD (eigenvalue {evals[0]:.3e})")
    cutoff = tol.support_cutoff_rel * max(evals[-1], 0.0)
    return np.where(evals > cutoff, evals, 0.0), evecs


def perspective_general(f: OperatorConvexF, rho: np.ndarray, sigma: np.ndarray,
                        tol: ToleranceConfig = DEFAULT_TOL) -> Superoperator:
    """``g(L, R) = f(L R^-1) R`` built in the joint eigenbasis of L and R.

    With ``rho = sum lam_i |u_i><u_i|`` and ``sigma = sum mu_j |v_j><v_j|``,
    ``|u_i><v_j|`` is an eigenvector of g with eigenvalue
    ``f(lam_i / mu_j) mu_j``. No matrix is ever inverted.
    """
    rho, n = _square(rho, None)
    sigma, _ = _square(sigma, n)
    lam, u = _clipped_eigh(rho, tol)
    mu, v = _clipped_eigh(sigma, tol)
    eig = f.perspective(lam[:, None], mu[None, :])
    if not np.all(np.isfinite(eig)):
        raise SupportViolation(f"perspective of {f.name} is infinite on some eigenpair")
    w = np.kron(u, v.conj())  # column i*n + j is vec(|u_i><v_j|)
    return Superoperator((w * eig.reshape(-1)) @ w.conj().T, n)


def quasi_form(f: OperatorConvexF, rho: np.ndarray, sigma: np.ndarray, o: np.ndarray,
               tol: ToleranceConfig = DEFAULT_TOL) -> float:
    return quadratic_form(perspective_general(f, rho, sigma, tol), o).real


def joint_convexity_trial(pair1: tuple[np.ndarray, np.ndarray], pair2: tuple[np.ndarray, np.ndarray],
                          c: float, o: np.ndarray, f: OperatorConvexF = XLOGX,
                          tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``c Q(pair1) + (1-c) Q(pair2) - Q(mixture)`` for the perspective form Q of f.

    Nonnegative for operator convex f.
    """
    if not 0 <= c <= 1 or math.isnan(c):
        raise ValueError(f"mixing weight must lie in [0, 1], got {c}")
    (r1, s1), (r2, s2) = pair1, pair2
    r1, r2, s1, s2 = (np.asarray(m, dtype=complex) for m in (r1, r2, s1, s2))
    q1 = quasi_form(f, r1, s1, o, tol)
    q2 = quasi_form(f, r2, s2, o, tol)
    qm = quasi_form(f, c * r1 + (1 - c) * r2, c * s1 + (1 - c) * s2, o, tol)
    return c * q1 + (1 - c) * q2 - qm
