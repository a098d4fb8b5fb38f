import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bagres.core import BagresError, BoundaryParam, ChannelRange, SpectralWindow
from bagres.disk_oracle import disk_dirac_eigs, zigzag_spectrum_disk
from bagres.linalg import eigvalsh
from bagres.radial_fd import (
    RadialGrid,
    assemble_dirichlet_laplacian_radial,
    assemble_htau_radial,
    assemble_zigzag_radial,
    boundary_row,
    discrete_alpha_grad,
    discrete_grad,
    scaling_map,
    trace_map,
    write_triplets,
)

J01 = 2.404825557695773
R1 = RadialGrid(1.0, 200)


def spectrum(op):
    return eigvalsh(op.matrix, op.weights)


def in_window(vals, lo, hi):
    return vals[(vals >= lo) & (vals <= hi)]


def test_grid_basics():
    g = RadialGrid(2.0, 4)
    assert g.h == 0.5
    assert np.allclose(g.integer_nodes, [0.5, 1, 1.5, 2])
    assert np.allclose(g.half_nodes, [0.25, 0.75, 1.25, 1.75])
    # sum of r h ~ R^2 / 2 for both families
    assert g.half_weights.sum() == pytest.approx(2.0)
    assert g.integer_weights.sum() == pytest.approx(2.0)
    with pytest.raises(BagresError):
        RadialGrid(1.0, 1)


@pytest.mark.parametrize("k", [-4, -1, 0, 3])
@pytest.mark.parametrize("tau", [-2.0, 0.0, 1.5])
def test_weighted_hermiticity(k, tau):
    op = assemble_htau_radial(k, BoundaryParam(tau), R1)
    assert op.hermiticity_residual() < 1e-12


@pytest.mark.parametrize("tau", [math.inf, -math.inf])
@pytest.mark.parametrize("k", [-3, 0, 2])
def test_zigzag_hermiticity(tau, k):
    op = assemble_zigzag_radial(k, BoundaryParam(tau), R1)
    assert op.hermiticity_residual() < 1e-12
    assert op.size == 2 * R1.n - (1 if (tau > 0) == (k <= -1) else 0)


@pytest.mark.parametrize("tau", [-1.0, 0.0, 1.0])
@pytest.mark.parametrize("k", [-3, -1, 0, 2])
def test_matches_oracle_without_pollution(tau, k):
    grid = RadialGrid(1.0, 400)
    prm = BoundaryParam(tau)
    ref = disk_dirac_eigs(prm, ChannelRange(k, k), SpectralWindow(-6, 6)).values
    fd = in_window(spectrum(assemble_htau_radial(k, prm, grid)), -6, 6)
    assert len(fd) == len(ref)
    assert np.max(np.abs(fd - ref)) < 5e-3


def test_second_order_convergence():
    prm = BoundaryParam(0.5)
    ref = disk_dirac_eigs(prm, ChannelRange(1, 1), SpectralWindow(1, 5)).values[0]
    errs = []
    for n in (100, 200, 400):
        vals = spectrum(assemble_htau_radial(1, prm, RadialGrid(1.0, n)))
        errs.append(abs(vals[vals > 1].min() - ref))
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


@pytest.mark.parametrize("k", [-3, 0, 4])
def test_discrete_conjugation_symmetry(k):
    a = spectrum(assemble_htau_radial(k, BoundaryParam(0.8), R1))
    b = spectrum(assemble_htau_radial(-k - 1, BoundaryParam(-0.8), R1))
    assert np.max(np.abs(np.sort(-b) - a)) < 1e-10


@pytest.mark.parametrize("k", range(-5, 5))
def test_zigzag_kernel_per_channel(k):
    vals = spectrum(assemble_zigzag_radial(k, BoundaryParam(math.inf), R1))
    hits = np.sum(np.abs(vals + 1.0) < 1e-6)
    assert hits == (1 if k <= -1 else 0)
    mvals = spectrum(assemble_zigzag_radial(k, BoundaryParam(-math.inf), R1))
    assert np.sum(np.abs(mvals - 1.0) < 1e-6) == (1 if k >= 0 else 0)


def test_zigzag_matches_closed_form():
    grid = RadialGrid(1.0, 400)
    prm = BoundaryParam(math.inf)
    for k in (-2, 0, 1):
        ref = zigzag_spectrum_disk(prm, SpectralWindow(-6, 6), ChannelRange(k, k)).values
        fd = in_window(spectrum(assemble_zigzag_radial(k, prm, grid)), -6, 6)
        assert len(fd) == len(ref)
        assert np.max(np.abs(fd - ref)) < 5e-3


def test_massless_zigzag_kinds_agree():
    grid = RadialGrid(1.0, 200)
    for k in (-2, 0, 1):
        p = spectrum(assemble_zigzag_radial(k, BoundaryParam(math.inf, mass=0.0), grid))
        q = spectrum(assemble_zigzag_radial(-k - 1, BoundaryParam(-math.inf, mass=0.0), grid))
        assert np.allclose(np.sort(-q), p, atol=1e-10)


def test_dirichlet_laplacian_first_level():
    op = assemble_dirichlet_laplacian_radial(0, RadialGrid(1.0, 800))
    vals = spectrum(op)
    assert vals.min() == pytest.approx(J01**2, abs=1e-4)
    assert op.hermiticity_residual() < 1e-12


@given(st.floats(0.3, 4.0), st.integers(0, 3))
@settings(max_examples=10, deadline=None)
def test_dirichlet_laplacian_scaling_and_positivity(R, order):
    a = spectrum(assemble_dirichlet_laplacian_radial(order, RadialGrid(1.0, 100)))
    b = spectrum(assemble_dirichlet_laplacian_radial(order, RadialGrid(R, 100)))
    assert np.all(a > 0)
    assert np.max(np.abs(b * R**2 - a) / a) < 1e-8


def test_scaling_map_identity_at_zero():
    S = scaling_map(BoundaryParam(0.0), R1, k=0)
    assert np.array_equal(S, np.eye(2 * R1.n + 1))


@pytest.mark.parametrize("k", [-2, 0, 3])
def test_scaling_map_sends_boundary_row(k):
    tau = 1.7
    prm = BoundaryParam(tau)
    grid = RadialGrid(1.0, 30)
    S = scaling_map(prm, grid, k)
    T = trace_map(k, prm, grid).toarray()
    b0 = boundary_row(k, BoundaryParam(0.0), grid)
    bt = boundary_row(k, prm, grid)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = T @ rng.standard_normal(2 * grid.n)
        assert abs(bt @ x) < 1e-12
        assert abs(b0 @ (S @ x)) < 1e-12
    d = np.diag(S)
    assert d.max() / d.min() == pytest.approx(math.exp(abs(tau)))


def test_scaling_map_needs_finite_tau():
    with pytest.raises(BagresError):
        scaling_map(BoundaryParam(math.inf), R1)


@pytest.mark.parametrize("k", [-2, 0, 3])
@pytest.mark.parametrize("tau", [0.4, math.inf, -math.inf])
def test_alpha_grad_consistency(k, tau):
    prm = BoundaryParam(tau, mass=0.7)
    grid = RadialGrid(1.0, 40)
    op = assemble_htau_radial(k, prm, grid) if prm.finite else assemble_zigzag_radial(k, prm, grid)
    AG = discrete_alpha_grad(grid, k)
    T = trace_map(k, prm, grid).toarray()
    beta = np.concatenate([np.ones(grid.n), -np.ones(grid.n)])
    full = -1j * AG @ T + 0.7 * np.diag(beta)
    assert np.max(np.abs(full[np.ix_(op.keep, op.keep)] - op.matrix)) < 1e-12


def test_zigzag_kernel_annihilated_by_alpha_grad():
    grid = RadialGrid(1.0, 60)
    k = -3
    prm = BoundaryParam(math.inf)
    op = assemble_zigzag_radial(k, prm, grid)
    from bagres.linalg import eigh
    dec = eigh(op.matrix, op.weights)
    i = np.argmin(np.abs(dec.values + 1.0))
    x = op.to_node_vector(dec.vectors[:, i])
    assert np.max(np.abs(x[: grid.n])) < 1e-8  # upper profile vanishes
    aug = trace_map(k, prm, grid) @ x
    # the Dirichlet row of f(R) is removed from the operator, so only kept rows count
    assert np.max(np.abs((discrete_alpha_grad(grid, k) @ aug)[op.keep])) < 1e-8


def test_discrete_grad_quadrature():
    # k = 0, f = 1 - r^2 on half nodes: int f'^2 r dr = 1
    grid = RadialGrid(1.0, 400)
    x = np.zeros(2 * grid.n + 1)
    x[: grid.n] = 1 - grid.half_nodes**2
    x[-1] = 0.0
    G = discrete_grad(grid, 0)
    assert np.sum(np.abs(G @ x) ** 2) == pytest.approx(1.0, rel=1e-4)


def test_tridiagonal_in_radius_order():
    op = assemble_htau_radial(2, BoundaryParam(0.3), RadialGrid(1.0, 20))
    perm, lo, d, up = op.tridiagonal()
    S = op.symmetric_form().toarray()[np.ix_(perm, perm)]
    rebuilt = np.diag(d) + np.diag(lo, -1) + np.diag(up, 1)
    assert np.allclose(S, rebuilt)


def test_triplet_export_round_trip(tmp_path):
    op = assemble_htau_radial(-2, BoundaryParam(0.3), RadialGrid(1.0, 12))
    path = write_triplets(op, tmp_path / "op.txt")
    rows = np.loadtxt(path, comments="#")
    A = np.zeros((op.size, op.size))
    A[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 2]
    assert np.array_equal(A, op.matrix)
    assert path.read_text().startswith("# channel=-2 kind=finite_tau")


def test_coarse_grid_rejected():
    with pytest.raises(BagresError):
        assemble_htau_radial(8, BoundaryParam(0.0), RadialGrid(1.0, 10))


def test_kind_and_radius_checks():
    with pytest.raises(BagresError):
        assemble_htau_radial(0, BoundaryParam(math.inf), R1)
    with pytest.raises(BagresError):
        assemble_zigzag_radial(0, BoundaryParam(0.0), R1)
    with pytest.raises(BagresError):
        assemble_htau_radial(0, BoundaryParam(0.0, radius=2.0), R1)
