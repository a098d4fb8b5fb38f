"""Staggered radial finite differences for one angular channel.

Unknowns of channel ``k`` are the real radial profiles ``(f, g)`` of
``u = f e^{ik theta}``, ``v = i g e^{i(k+1) theta}`` (see ``disk_oracle``).
The grid has two node families, integer nodes ``r_j = j h`` (``j = 1..n``,
the last one sits on the boundary) and half nodes ``r_{j-1/2}``. The profile
that vanishes at the origin is placed on the integer family, so the origin
node is simply dropped:

* ``k >= 0``: ``g ~ r^{k+1}`` on integer nodes, ``f`` on half nodes;
* ``k <= -1``: ``f ~ r^{|k|}`` on integer nodes, ``g`` on half nodes.

The two layouts are exact mirror images under ``k -> -k-1``, ``f <-> g``.
One derivative is written as a two-point stencil on the cell between adjacent
nodes, the other one is its adjoint in the ``r dr`` quadrature, so every
operator is self-adjoint in the weighted inner product up to rounding.

The boundary trace of the half-node profile is not a grid value. It is
carried as an extra "ghost" entry; an *augmented* vector is
``[f-nodes, g-nodes, ghost]`` and the boundary row ``f(R) = e^{-tau} g(R)``
is a linear constraint on it. :func:`trace_map` fills the ghost from the
boundary condition and the operator is ``D_aug @ T_tau + m beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from .core import BagresError, BoundaryParam

__all__ = [
    "RadialGrid",
    "ChannelOperator",
    "assemble_htau_radial",
    "assemble_zigzag_radial",
    "assemble_dirichlet_laplacian_radial",
    "boundary_row",
    "trace_map",
    "scaling_map",
    "discrete_alpha_grad",
    "discrete_grad",
    "write_triplets",
]

KINDS = ("finite_tau", "zigzag_plus", "zigzag_minus", "dirichlet_laplacian")


@dataclass(frozen=True)
class RadialGrid:
    radius: float
    n: int

    def __post_init__(self):
        if not self.radius > 0:
            raise BagresError("radius must be > 0")
        if int(self.n) != self.n or self.n < 2:
            raise BagresError("grid needs n >= 2 cells")

    @property
    def h(self) -> float:
        return self.radius / self.n

    @property
    def integer_nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)

    @property
    def half_nodes(self) -> np.ndarray:
        return self.h * (np.arange(1, self.n + 1) - 0.5)

    @property
    def integer_weights(self) -> np.ndarray:
        # trapezoid closure: the boundary node owns half a cell
        w = self.integer_nodes * self.h
        w[-1] *= 0.5
        return w

    @property
    def half_weights(self) -> np.ndarray:
        return self.half_nodes * self.h


def _check_resolution(k: int, grid: RadialGrid):
    if abs(k) * grid.h / grid.radius > 0.5:
        raise BagresError(f"grid with n={grid.n} too coarse for channel k={k} (needs |k|*h/R <= 0.5)")


@dataclass(frozen=True)
class _Layout:
    """Where the entries of channel ``k`` live (block order: f then g)."""

    k: int
    grid: RadialGrid

    @property
    def g_integer(self) -> bool:
        return self.k >= 0

    @property
    def f_radii(self):
        return self.grid.half_nodes if self.g_integer else self.grid.integer_nodes

    @property
    def g_radii(self):
        return self.grid.integer_nodes if self.g_integer else self.grid.half_nodes

    @property
    def f_weights(self):
        return self.grid.half_weights if self.g_integer else self.grid.integer_weights

    @property
    def g_weights(self):
        return self.grid.integer_weights if self.g_integer else self.grid.half_weights

    @property
    def size(self) -> int:
        return 2 * self.grid.n

    # positions in the augmented vector [f, g, ghost]
    @property
    def f_R(self) -> int:
        return 2 * self.grid.n if self.g_integer else self.grid.n - 1

    @property
    def g_R(self) -> int:
        return 2 * self.grid.n - 1 if self.g_integer else 2 * self.grid.n

    @property
    def upper_mask_aug(self) -> np.ndarray:
        n = self.grid.n
        mask = np.zeros(2 * n + 1, dtype=bool)
        mask[:n] = True
        if self.g_integer:
            mask[2 * n] = True  # ghost is f(R)
        return mask


def _cell_stencil(k: int, grid: RadialGrid):
    """Two-point stencil from integer nodes to half nodes.

    ``k >= 0``: ``D+ g = g' + (k+1) g / r``. ``k <= -1``: ``D- f = -f' + k f / r``.
    Returns ``(diag, sub)``: the coefficient of node ``j`` and of node ``j-1``
    in the row of half node ``j - 1/2`` (the ``j = 0`` origin term is dropped).
    """
    h = grid.h
    s = grid.half_nodes
    if k >= 0:
        sign, cent = 1.0, (k + 1) / (2 * s)
    else:
        sign, cent = -1.0, k / (2 * s)
    diag = sign / h + cent
    sub = -sign / h + cent
    return diag, sub[1:]


def _alpha_grad_real(k: int, grid: RadialGrid) -> sparse.csr_matrix:
    """Real massless block acting on augmented vectors, shape ``(2n, 2n+1)``."""
    n, h = grid.n, grid.h
    lay = _Layout(k, grid)
    diag, sub = _cell_stencil(k, grid)
    # half <- integer, explicit
    C = sparse.diags([diag, sub], [0, -1], shape=(n, n), format="csr")
    if lay.g_integer:
        w_half, w_int = lay.f_weights, lay.g_weights
    else:
        w_half, w_int = lay.g_weights, lay.f_weights
    # integer <- half, weighted adjoint
    Ct = sparse.diags(1.0 / w_int) @ C.T @ sparse.diags(w_half)
    ghost = sparse.csr_matrix(([(-2.0 if lay.g_integer else 2.0) / h], ([n - 1], [0])), shape=(n, 1))
    Z = sparse.csr_matrix((n, n))
    if lay.g_integer:
        # rows: f (half) <- D+ g ; g (integer) <- D- f + ghost f(R)
        top = sparse.hstack([Z, C, sparse.csr_matrix((n, 1))])
        bot = sparse.hstack([Ct, Z, ghost])
    else:
        # rows: f (integer) <- D+ g + ghost g(R) ; g (half) <- D- f
        top = sparse.hstack([Z, Ct, ghost])
        bot = sparse.hstack([C, Z, sparse.csr_matrix((n, 1))])
    return sparse.vstack([top, bot]).tocsr()


def _beta(k: int, grid: RadialGrid) -> np.ndarray:
    n = grid.n
    return np.concatenate([np.ones(n), -np.ones(n)])


def trace_map(k: int, params: BoundaryParam, grid: RadialGrid) -> sparse.csr_matrix:
    """``T_tau``: node vector -> augmented vector, with the ghost trace set by the boundary row.

    For ``tau = +-inf`` the ghost is zero whenever the ghost is the constrained
    component, and unused otherwise (that boundary row is removed).
    """
    n = grid.n
    lay = _Layout(k, grid)
    T = sparse.lil_matrix((2 * n + 1, 2 * n))
    T[np.arange(2 * n), np.arange(2 * n)] = 1.0
    tau = params.tau
    if lay.g_integer:
        coef = math.exp(-tau) if math.isfinite(tau) else 0.0  # f(R) = e^{-tau} g(R)
        T[2 * n, lay.g_R] = coef
    else:
        coef = math.exp(tau) if math.isfinite(tau) else 0.0  # g(R) = e^{tau} f(R)
        T[2 * n, lay.f_R] = coef
    return T.tocsr()


def boundary_row(k: int, params: BoundaryParam, grid: RadialGrid) -> np.ndarray:
    """Row vector ``b`` on augmented vectors with ``b . x = f(R) - e^{-tau} g(R)``.

    ``tau = +inf`` gives ``f(R)``, ``tau = -inf`` gives ``g(R)``.
    """
    lay = _Layout(k, grid)
    b = np.zeros(2 * grid.n + 1)
    tau = params.tau
    if tau == math.inf:
        b[lay.f_R] = 1.0
    elif tau == -math.inf:
        b[lay.g_R] = 1.0
    else:
        b[lay.f_R] = 1.0
        b[lay.g_R] = -math.exp(-tau)
    return b


def scaling_map(params: BoundaryParam, grid: RadialGrid, k: int = 0) -> np.ndarray:
    """``diag(e^{tau/2}`` on upper entries, ``e^{-tau/2}`` on lower entries) on augmented vectors.

    Maps the ``tau`` boundary row onto the ``tau = 0`` row:
    ``e^{tau/2} f(R) - e^{-tau/2} g(R) = e^{tau/2} (f(R) - e^{-tau} g(R))``.
    """
    if not params.finite:
        raise BagresError("scaling_map needs finite tau")
    mask = _Layout(k, grid).upper_mask_aug
    return np.diag(np.where(mask, math.exp(params.tau / 2), math.exp(-params.tau / 2)))


def discrete_alpha_grad(grid: RadialGrid, k: int) -> np.ndarray:
    """Discrete ``alpha . grad`` of channel ``k`` on augmented vectors, shape ``(2n, 2n+1)``.

    Anti-self-adjoint counterpart of the massless Dirac block:
    ``ChannelOperator.matrix == (-1j * alpha_grad @ T_tau)[keep] + m * beta``.
    The factor ``i`` of the lower component is absorbed by the separation,
    so ``-1j * alpha_grad`` is real.
    """
    _check_resolution(k, grid)
    return 1j * _alpha_grad_real(k, grid).toarray()


def discrete_grad(grid: RadialGrid, k: int) -> np.ndarray:
    """Stacked ``(f', k f / r, g', (k+1) g / r)`` on augmented vectors.

    Rows are pre-scaled by the square roots of their quadrature weights, so the
    Euclidean norm of ``G @ x`` is the discrete ``||grad phi||``.
    """
    _check_resolution(k, grid)
    n, h = grid.n, grid.h
    lay = _Layout(k, grid)
    ri, si = grid.integer_nodes, grid.half_nodes
    wi, ws = grid.integer_weights, grid.half_weights
    N = 2 * n + 1
    rows = []

    def block(offset, ghost_col, half_profile, centrifugal):
        """Derivative and centrifugal rows of one profile stored at ``offset``."""
        out = []
        if half_profile:
            # derivative at integer nodes, one-sided half cell at R using the ghost
            D = np.zeros((n, N))
            for j in range(n - 1):
                D[j, offset + j + 1] = 1.0 / h
                D[j, offset + j] = -1.0 / h
            D[n - 1, ghost_col] = 2.0 / h
            D[n - 1, offset + n - 1] = -2.0 / h
            out.append(np.sqrt(wi)[:, None] * D)
            K = np.zeros((n, N))
            K[np.arange(n), offset + np.arange(n)] = centrifugal / si
            out.append(np.sqrt(ws)[:, None] * K)
        else:
            D = np.zeros((n, N))
            D[np.arange(n), offset + np.arange(n)] = 1.0 / h
            D[np.arange(1, n), offset + np.arange(n - 1)] = -1.0 / h
            out.append(np.sqrt(ws)[:, None] * D)
            K = np.zeros((n, N))
            K[np.arange(n), offset + np.arange(n)] = centrifugal / ri
            out.append(np.sqrt(wi)[:, None] * K)
        return out

    rows += block(0, 2 * n, lay.g_integer, k)
    rows += block(n, 2 * n, not lay.g_integer, k + 1)
    return np.vstack(rows)


@dataclass(frozen=True, eq=False)
class ChannelOperator:
    """Self-adjoint (in the ``weights`` inner product) matrix of one channel.

    ``keep`` lists the node indices that survive a Dirichlet removal, so
    ``matrix`` has size ``len(keep)``; ``radii`` and ``upper`` describe each
    surviving entry.
    """

    sparse_matrix: sparse.csr_matrix
    channel: int
    params: BoundaryParam | None
    kind: str
    weights: np.ndarray
    grid: RadialGrid
    keep: np.ndarray
    radii: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BagresError(f"unknown operator kind {self.kind!r}")
        if not np.all(self.weights > 0):
            raise BagresError("quadrature weights must be positive")

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.sparse_matrix.toarray()

    @property
    def size(self) -> int:
        return self.sparse_matrix.shape[0]

    def symmetric_form(self) -> sparse.csr_matrix:
        """``S = W A``; symmetric whenever ``A`` is self-adjoint in the weighted product."""
        return (sparse.diags(self.weights) @ self.sparse_matrix).tocsr()

    def hermiticity_residual(self) -> float:
        S = self.symmetric_form()
        asym = abs(S - S.T.conjugate()).max()
        return float(asym / max(abs(S).max(), np.finfo(float).tiny))

    def tridiagonal(self):
        """Radius-ordered permutation and the three diagonals of ``S``.

        Neighbouring entries in radius are the only ones coupled by the
        stencil, so ``S[perm][:, perm]`` is tridiagonal (the Laplacian is
        tridiagonal already).
        """
        perm = np.argsort(self.radii, kind="stable")
        S = self.symmetric_form()[perm][:, perm].tocsr()
        lower = S.diagonal(-1)
        if abs(S).sum() - abs(sparse.diags([lower, S.diagonal(), S.diagonal(1)], [-1, 0, 1])).sum() > 1e-9 * abs(S).sum():
            raise BagresError("operator is not tridiagonal in radius order")
        return perm, lower, S.diagonal(), S.diagonal(1)

    def to_node_vector(self, x_keep: np.ndarray) -> np.ndarray:
        """Embed a vector of surviving entries into the full ``2n`` node space (zeros elsewhere)."""
        out = np.zeros(2 * self.grid.n, dtype=np.result_type(x_keep, float))
        out[self.keep] = x_keep
        return out


def _build(k: int, params: BoundaryParam, grid: RadialGrid, kind: str) -> ChannelOperator:
    _check_resolution(k, grid)
    lay = _Layout(k, grid)
    D = _alpha_grad_real(k, grid)
    T = trace_map(k, params, grid)
    A = D @ T + sparse.diags(params.mass * _beta(k, grid))
    keep = np.arange(2 * grid.n)
    if kind == "zigzag_plus" and not lay.g_integer:
        keep = np.delete(keep, lay.f_R)  # Dirichlet on f(R) node
    elif kind == "zigzag_minus" and lay.g_integer:
        keep = np.delete(keep, lay.g_R)  # Dirichlet on g(R) node
    A = A.tocsr()[keep][:, keep]
    weights = np.concatenate([lay.f_weights, lay.g_weights])[keep]
    radii = np.concatenate([lay.f_radii, lay.g_radii])[keep]
    upper = np.concatenate([np.ones(grid.n, bool), np.zeros(grid.n, bool)])[keep]
    return ChannelOperator(A.tocsr(), k, params, kind, weights, grid, keep, radii, upper)


def assemble_htau_radial(k: int, params: BoundaryParam, grid: RadialGrid) -> ChannelOperator:
    """Channel-``k`` block of ``H_tau`` for finite ``tau``."""
    if not params.finite:
        raise BagresError("assemble_htau_radial needs finite tau; use assemble_zigzag_radial")
    if not math.isclose(params.radius, grid.radius):
        raise BagresError("params.radius and grid.radius differ")
    return _build(k, params, grid, "finite_tau")


def assemble_zigzag_radial(k: int, params: BoundaryParam, grid: RadialGrid) -> ChannelOperator:
    """Channel-``k`` block of ``H_{+inf}`` (Dirichlet on ``f``) or ``H_{-inf}`` (Dirichlet on ``g``)."""
    if params.finite:
        raise BagresError("assemble_zigzag_radial needs tau = +inf or -inf")
    if not math.isclose(params.radius, grid.radius):
        raise BagresError("params.radius and grid.radius differ")
    return _build(k, params, grid, params.kind)


def assemble_dirichlet_laplacian_radial(order: int, grid: RadialGrid) -> ChannelOperator:
    """Cell-centred ``-(1/r)(r u')' + order^2 u / r^2`` with ``u(R) = 0``.

    ``u`` lives on half nodes, fluxes on integer nodes; the origin flux is
    zero because ``r = 0`` there, and the boundary uses the mirrored ghost
    ``u_{n+1/2} = -u_{n-1/2}``.
    """
    if order < 0:
        raise BagresError("order must be >= 0")
    n, h = grid.n, grid.h
    s = grid.half_nodes
    r = grid.integer_nodes
    flux_out = r.copy()  # flux through r_j in the row of cell j
    flux_in = np.concatenate([[0.0], r[:-1]])
    diag = (flux_out + flux_in) / (h * h * s) + order**2 / s**2
    diag[-1] = (2 * r[-1] + flux_in[-1]) / (h * h * s[-1]) + order**2 / s[-1] ** 2
    up = -r[:-1] / (h * h * s[:-1])
    lo = -r[:-1] / (h * h * s[1:])
    A = sparse.diags([lo, diag, up], [-1, 0, 1], format="csr")
    return ChannelOperator(A, order, None, "dirichlet_laplacian", grid.half_weights, grid,
                           np.arange(n), s.copy(), np.ones(n, bool))


def write_triplets(op: ChannelOperator, path: str | Path) -> Path:
    """Write nonzeros as ``row col real imag`` lines (0-based, 17 significant digits)."""
    path = Path(path)
    A = op.sparse_matrix.tocoo()
    order = np.lexsort((A.col, A.row))
    with path.open("w") as fh:
        fh.write(f"# channel={op.channel} kind={op.kind} size={op.size}\n")
        for i in order:
            v = complex(A.data[i])
            fh.write(f"{A.row[i]} {A.col[i]} {v.real:.17g} {v.imag:.17g}\n")
    return path
