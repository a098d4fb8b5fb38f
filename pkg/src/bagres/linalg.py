"""Dense Hermitian eigensolves, operator norms, shifted solves and projectors.

Every routine takes optional quadrature ``weights``: a matrix ``A`` is
self-adjoint in ``<x, y>_W = sum w_i conj(x_i) y_i`` iff ``W A`` is Hermitian,
and it is then unitarily similar to ``W^{1/2} A W^{-1/2}``. Norms are always
taken in the weighted product so radial weights never leak into Euclidean
norms.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import BagresError, NumericalFailure

log = logging.getLogger(__name__)

__all__ = [
    "EigenDecomposition",
    "Projector",
    "eigh",
    "eigvalsh",
    "opnorm",
    "solve_shifted",
    "projector_from_eigenspace",
    "weighted_norm",
    "hermiticity_residual",
]

HERMITIAN_TOL = 1e-10


def _weights(A, weights):
    n = A.shape[0]
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or not np.all(w > 0):
        raise BagresError("weights must be a positive vector matching the matrix size")
    return w


def weighted_norm(x, weights=None) -> float:
    x = np.asarray(x)
    if weights is None:
        return float(np.linalg.norm(x))
    return float(np.sqrt(np.sum(np.asarray(weights) * np.abs(x) ** 2)))


def hermiticity_residual(A, weights=None) -> float:
    """``max|WA - (WA)^H| / max|WA|``."""
    A = np.asarray(A)
    w = _weights(A, weights)
    S = w[:, None] * A
    scale = np.abs(S).max()
    if scale == 0:
        return 0.0
    return float(np.abs(S - S.conj().T).max() / scale)


def _similar(A, w):
    sw = np.sqrt(w)
    return sw[:, None] * A / sw[None, :]


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray  # columns orthonormal in the weighted product
    residual: float
    weights: np.ndarray

    def __len__(self):
        return len(self.values)


def eigh(A, weights=None) -> EigenDecomposition:
    """Full spectral decomposition of a weighted-Hermitian matrix.

    LAPACK ``*heevd`` through :func:`numpy.linalg.eigh` on the symmetrized
    ``W^{1/2} A W^{-1/2}``; vectors are mapped back so they are
    ``W``-orthonormal.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise BagresError("eigh needs a square matrix")
    w = _weights(A, weights)
    asym = hermiticity_residual(A, w)
    if asym > HERMITIAN_TOL:
        raise BagresError(f"matrix is not Hermitian in the weighted product (relative asymmetry {asym:.3e})")
    M = _similar(A, w)
    M = 0.5 * (M + M.conj().T)
    vals, Q = np.linalg.eigh(M)
    V = Q / np.sqrt(w)[:, None]
    # residual in the weighted norm, relative to ||A||_W = max |lambda|
    anorm = max(np.abs(vals).max(), np.finfo(float).tiny)
    R = A @ V - V * vals[None, :]
    res = np.sqrt(np.sum(w[:, None] * np.abs(R) ** 2, axis=0)).max() / anorm
    return EigenDecomposition(vals, V, float(res), w)


def eigvalsh(A, weights=None) -> np.ndarray:
    """Eigenvalues only, same checks and similarity transform as :func:`eigh`."""
    A = np.asarray(A)
    w = _weights(A, weights)
    asym = hermiticity_residual(A, w)
    if asym > HERMITIAN_TOL:
        raise BagresError(f"matrix is not Hermitian in the weighted product (relative asymmetry {asym:.3e})")
    M = _similar(A, w)
    return np.linalg.eigvalsh(0.5 * (M + M.conj().T))


def opnorm(A, weights=None, tol: float = 1e-12, seed: int = 42, restarts: int = 3,
           max_iter: int = 50_000) -> float:
    """Largest singular value (weighted norm) by power iteration on ``A^H A``.

    Three restarts from seeded random vectors; the largest converged estimate
    wins. Raises :class:`NumericalFailure` with the last iterate if the
    relative change never drops below ``tol``.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise BagresError("opnorm needs a square matrix")
    w = _weights(A, weights)
    M = _similar(A, w)
    if not np.any(M):
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        x = rng.standard_normal(M.shape[0])
        if np.iscomplexobj(M):
            x = x + 1j * rng.standard_normal(M.shape[0])
        x /= np.linalg.norm(x)
        sigma_old = 0.0
        for it in range(max_iter):
            y = M @ x
            sigma = np.linalg.norm(y)
            if sigma == 0.0:
                break
            z = M.conj().T @ y
            x = z / np.linalg.norm(z)
            if abs(sigma - sigma_old) <= tol * sigma:
                break
            sigma_old = sigma
        else:
            raise NumericalFailure(
                f"power iteration did not converge in {max_iter} steps (last estimate {sigma:.15g}, "
                f"last change {abs(sigma - sigma_old):.3e})"
            )
        best = max(best, float(np.linalg.norm(M @ x)))
    return best


def solve_shifted(A, lam: complex, f, weights=None):
    """Solve ``(A - lam) x = f`` by LU with partial pivoting; ``f`` may hold several columns."""
    lam = complex(lam)
    if lam.imag == 0.0:
        raise BagresError("solve_shifted needs Im(lambda) != 0")
    A = np.asarray(A)
    n = A.shape[0]
    B = A.astype(complex) - lam * np.eye(n)
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            lu = sla.lu_factor(B, check_finite=True)
        except (sla.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"LU breakdown for shift {lam}: {exc}") from exc
    f = np.asarray(f)
    x = sla.lu_solve(lu, f)
    res = np.linalg.norm(B @ x - f) / max(np.linalg.norm(f), np.finfo(float).tiny)
    if res > 1e-10:
        raise NumericalFailure(f"shifted solve residual {res:.3e} exceeds 1e-10")
    return x


@dataclass(frozen=True)
class Projector:
    """``W``-orthogonal projector onto the complement of an eigenspace."""

    matrix: np.ndarray
    rank: int
    target: float
    tol: float
    weights: np.ndarray
    kernel_dim: int

    @property
    def empty_eigenspace(self) -> bool:
        return self.kernel_dim == 0

    def __matmul__(self, other):
        return self.matrix @ other


def projector_from_eigenspace(A, target: float, tol: float, weights=None) -> Projector:
    """Projector onto the orthogonal complement of ``span{v : |lambda - target| <= tol}``.

    An empty eigenspace yields the identity; it is flagged through
    :attr:`Projector.empty_eigenspace` (per channel, half of the zigzag
    blocks carry no kernel).
    """
    dec = eigh(A, weights)
    w = dec.weights
    sel = np.abs(dec.values - target) <= tol
    V = dec.vectors[:, sel]
    n = A.shape[0]
    P = np.eye(n, dtype=np.result_type(V, float)) - V @ (V.conj().T * w[None, :])
    if not sel.any():
        log.info("empty eigenspace at target %g (tol %g): projector is the identity", target, tol)
    return Projector(P, n - int(sel.sum()), float(target), float(tol), w, int(sel.sum()))
