import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, special

from bagres.core import BagresError, BoundaryParam, ChannelRange, SpectralWindow
from bagres.disk_oracle import (
    SecularProblem,
    SpectralResult,
    Eigenvalue,
    dirichlet_disk_eigs,
    disk_dirac_eigs,
    lambda1_plus,
    secular_value,
    subgap_value,
    zigzag_spectrum_disk,
)

J01 = 2.404825557695773


def jsigned(n, x):
    return special.jv(n, x) if n >= 0 else (-1) ** n * special.jv(-n, x)


def independent_roots(k, tau, m, R, lo, hi, samples=4000):
    """Roots of (E+m) J_k(pR) - e^{-tau} p J_{k+1}(pR) by brentq on a fine scan."""
    def G(E):
        p = math.sqrt(E * E - m * m)
        return (E + m) * jsigned(k, p * R) - math.exp(-tau) * p * jsigned(k + 1, p * R)

    out = []
    for a_, b_ in [(max(lo, m), hi), (lo, min(hi, -m))]:
        if b_ <= a_:
            continue
        Es = np.linspace(a_, b_, samples)[1:-1] if a_ in (m, -m) or b_ in (m, -m) else np.linspace(a_, b_, samples)
        Es = Es[np.abs(Es) > m + 1e-9]
        vals = [G(E) for E in Es]
        for i in range(len(Es) - 1):
            if vals[i] * vals[i + 1] < 0:
                out.append(optimize.brentq(G, Es[i], Es[i + 1], xtol=1e-15, rtol=1e-15))
    return sorted(out)


def test_dirichlet_examples():
    ev = dirichlet_disk_eigs(1.0, 6)
    assert ev[0] == pytest.approx(5.783185962946785, abs=1e-12)
    j11 = special.jn_zeros(1, 1)[0]
    assert ev[1] == ev[2] == pytest.approx(j11**2)
    ref = sorted([special.jn_zeros(0, 1)[0] ** 2] + [special.jn_zeros(1, 1)[0] ** 2] * 2
                 + [special.jn_zeros(2, 1)[0] ** 2] * 2 + [special.jn_zeros(0, 2)[1] ** 2])
    assert np.allclose(ev, ref)


@given(st.floats(0.2, 5.0))
@settings(max_examples=20, deadline=None)
def test_dirichlet_radius_scaling(R):
    assert np.allclose(np.array(dirichlet_disk_eigs(R, 5)) * R**2, dirichlet_disk_eigs(1.0, 5), rtol=1e-12)


def test_zigzag_plus_spectrum():
    res = zigzag_spectrum_disk(BoundaryParam(math.inf), SpectralWindow(-4, 4))
    assert res.provenance == "oracle"
    kern = [e for e in res.eigenvalues if e.infinite_multiplicity]
    assert len(kern) == 1 and kern[0].value == -1.0
    top = math.sqrt(J01**2 + 1)
    assert top in res.values and -top in res.values
    assert np.all(np.abs(np.abs(res.values[res.values != -1.0]) - top) < 2.0)


def test_zigzag_minus_mirror():
    plus = zigzag_spectrum_disk(BoundaryParam(math.inf), SpectralWindow(-6, 6), ChannelRange(-9, 8))
    minus = zigzag_spectrum_disk(BoundaryParam(-math.inf), SpectralWindow(-6, 6), ChannelRange(-9, 8))
    for k in range(-9, 9):
        assert np.allclose(np.sort(-minus.for_channel(-k - 1)), plus.for_channel(k))


def test_zigzag_kernel_attribution():
    res = zigzag_spectrum_disk(BoundaryParam(math.inf), SpectralWindow(-2, 2), ChannelRange(-4, 3))
    owners = sorted(e.channel for e in res.eigenvalues if e.value == -1.0)
    assert owners == [-4, -3, -2, -1]


def test_massless_zigzag_kinds_coincide():
    p = zigzag_spectrum_disk(BoundaryParam(math.inf, mass=0.0), SpectralWindow(-8, 8))
    q = zigzag_spectrum_disk(BoundaryParam(-math.inf, mass=0.0), SpectralWindow(-8, 8))
    assert np.allclose(np.unique(p.values), np.unique(q.values))


@pytest.mark.parametrize("tau", [-1.0, 0.0, 0.7, 2.5])
@pytest.mark.parametrize("k", [-3, -1, 0, 2])
def test_secular_roots_match_independent_oracle(tau, k):
    prm = BoundaryParam(tau)
    res = disk_dirac_eigs(prm, ChannelRange(k, k), SpectralWindow(-7, 7))
    ref = independent_roots(k, tau, 1.0, 1.0, -7, 7)
    assert np.allclose(res.values, ref, atol=1e-11)
    assert all(e.residual <= 1e-12 * max(1, abs(e.value) + 1) for e in res.eigenvalues)


def test_separated_profiles_solve_radial_system():
    # f = J_k(pr), g = p J_{k+1}(pr)/(E+m) must satisfy both radial equations
    k, m, E = 2, 1.0, 3.7
    p = math.sqrt(E * E - m * m)
    r = np.linspace(0.3, 1.0, 9)
    d = 1e-6
    f = lambda s: special.jv(k, p * s)
    g = lambda s: p * special.jv(k + 1, p * s) / (E + m)
    eq1 = m * f(r) + (g(r + d) - g(r - d)) / (2 * d) + (k + 1) * g(r) / r - E * f(r)
    eq2 = -(f(r + d) - f(r - d)) / (2 * d) + k * f(r) / r - m * g(r) - E * g(r)
    assert np.max(np.abs(eq1)) < 1e-8 and np.max(np.abs(eq2)) < 1e-8


def test_symmetry_under_conjugation():
    w = SpectralWindow(-6, 6)
    for k in (-4, 0, 3):
        a = disk_dirac_eigs(BoundaryParam(1.3), ChannelRange(k, k), w).values
        b = disk_dirac_eigs(BoundaryParam(-1.3), ChannelRange(-k - 1, -k - 1), w).values
        assert np.allclose(np.sort(-b), a, atol=1e-12)


@given(st.floats(-5, 5), st.integers(-6, 5))
@settings(max_examples=25, deadline=None)
def test_gap_is_empty(tau, k):
    res = disk_dirac_eigs(BoundaryParam(tau), ChannelRange(k, k), SpectralWindow(-5, 5))
    assert not np.any((res.values > -1) & (res.values < 1))


@given(st.floats(-8, 8), st.integers(-8, 8), st.floats(-0.999, 0.999))
def test_subgap_function_positive(tau, k, E):
    assert subgap_value(E, SecularProblem(k, BoundaryParam(tau))) > 0


def test_secular_value_domain():
    prob = SecularProblem(0, BoundaryParam(0.0))
    with pytest.raises(BagresError):
        secular_value(0.5, prob)
    with pytest.raises(BagresError):
        SecularProblem(0, BoundaryParam(math.inf))
    with pytest.raises(BagresError):
        disk_dirac_eigs(BoundaryParam(math.inf), ChannelRange(0, 0), SpectralWindow(-2, 2))


def test_oracle_result_rejects_gap_values():
    from bagres.core import NumericalFailure
    with pytest.raises(NumericalFailure):
        SpectralResult([Eigenvalue(0.2, 0, 0.0)], "oracle", BoundaryParam(0.0))


def test_large_tau_approaches_zigzag_plus():
    top = math.sqrt(J01**2 + 1)
    errs = [abs(lambda1_plus(BoundaryParam(t), ChannelRange(-9, 8)) - top) for t in (4.0, 6.0, 8.0)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_negative_tau_approaches_zigzag_minus():
    # tau -> -inf: positive values tend to sqrt(j_{1,1}^2 + m^2) ... and +m itself
    vals = [lambda1_plus(BoundaryParam(t), ChannelRange(-9, 8)) for t in (-2.0, -4.0, -6.0)]
    assert vals[0] > vals[1] > vals[2] > 1.0
    assert vals[2] - 1.0 < 0.02


def test_lambda1_monotone_in_tau():
    taus = np.linspace(-3, 3, 13)
    vals = [lambda1_plus(BoundaryParam(t), ChannelRange(-9, 8)) for t in taus]
    assert np.all(np.diff(vals) > 0)
