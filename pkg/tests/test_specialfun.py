import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from bagres.core import BagresError, NumericalFailure
from bagres.specialfun import (
    BesselZeroTable,
    ZeroCache,
    bessel_i_scaled,
    bessel_j,
    bessel_j_signed,
    bessel_zeros,
    set_zero_cache,
    zeros_below,
)
import bagres.specialfun as sf


def j0_series(x, terms=60):
    # independent oracle: sum (-1)^k (x/2)^{2k} / (k!)^2
    s, t = 0.0, 1.0
    for k in range(terms):
        s += t
        t *= -(x * x / 4) / ((k + 1) ** 2)
    return s


def bisect_series(a, b):
    fa = j0_series(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = j0_series(mid)
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_agrees_with_series_oracle():
    # the series cancels badly past x ~ 6, so the oracle is only trusted there
    xs = np.linspace(0, 6, 97)
    assert np.max(np.abs(bessel_j(0, xs) - [j0_series(x) for x in xs])) < 1e-13


def test_first_zero_against_series_bisection():
    z = bisect_series(2.0, 3.0)
    assert z == pytest.approx(2.404825557695773, abs=1e-14)
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-12
    assert bessel_zeros(0, 1)[0] == pytest.approx(z, abs=1e-14)


def test_zero_examples():
    assert bessel_zeros(1, 1)[0] == pytest.approx(3.831705970207512, abs=1e-13)
    j01, j02 = bessel_zeros(0, 2).zeros
    j11 = bessel_zeros(1, 1)[0]
    assert j01 < j11 < j02


@pytest.mark.parametrize("order", [0, 1, 2, 5, 9, 20])
def test_zeros_match_scipy_and_residual(order):
    t = bessel_zeros(order, 25)
    assert np.allclose(t.zeros, special.jn_zeros(order, 25), rtol=0, atol=1e-11)
    assert np.all(t.residuals() <= 1e-12)
    assert np.all(np.diff(t.zeros) > 0)


@given(st.integers(0, 15))
def test_interlacing(n):
    a = np.array(bessel_zeros(n, 12).zeros)
    b = np.array(bessel_zeros(n + 1, 12).zeros)
    # j_{n,s} < j_{n+1,s} < j_{n,s+1}
    assert np.all(a < b)
    assert np.all(b[:-1] < a[1:])


def test_signed_and_scaled():
    x = np.linspace(0.1, 8, 11)
    assert np.allclose(bessel_j_signed(-3, x), -special.jv(3, x))
    assert np.allclose(bessel_j_signed(-2, x), special.jv(2, x))
    assert np.allclose(bessel_i_scaled(-2, x), special.ive(2, x))


def test_bad_inputs():
    with pytest.raises(BagresError):
        bessel_j(-1, 1.0)
    with pytest.raises(BagresError):
        bessel_j(0, -1.0)
    with pytest.raises(BagresError):
        bessel_zeros(0, 0)


def test_table_rejects_unsorted():
    with pytest.raises(NumericalFailure):
        BesselZeroTable(0, (3.0, 2.0))


def test_stalled_bisection_fails_loudly(monkeypatch):
    # a residual tolerance below rounding of J near the root cannot be met
    with pytest.raises(NumericalFailure):
        bessel_zeros(0, 3, tol=1e-30)


def test_zeros_below():
    z = zeros_below(0, 10.0)
    assert np.allclose(z, special.jn_zeros(0, 3))
    assert zeros_below(3, 0.0).size == 0


def test_cache_round_trip(tmp_path):
    path = tmp_path / "bessel_zeros.txt"
    c = ZeroCache(path)
    first = c.get(2, 5)
    text = path.read_text()
    assert text.startswith("# bessel zeros tol=1e-12")
    assert len(text.strip().splitlines()) == 6
    # a fresh cache reads, re-polishes, and returns the same values
    again = ZeroCache(path).get(2, 5)
    assert np.allclose(again.zeros, first.zeros, atol=1e-14)


@pytest.mark.parametrize("garbage", ["not a cache\n", "# bessel zeros tol=1e-12\n0 1 7.0\n", "# bessel zeros tol=1e-6\n0 1 2.404\n"])
def test_corrupt_or_stale_cache_is_rebuilt(tmp_path, caplog, garbage):
    path = tmp_path / "bessel_zeros.txt"
    path.write_text(garbage)
    t = ZeroCache(path).get(0, 3)
    assert np.allclose(t.zeros, special.jn_zeros(0, 3))
    assert "2.40482555769577" in path.read_text()


def test_default_cache_swap(tmp_path):
    old = sf._default_cache
    try:
        set_zero_cache(ZeroCache(tmp_path / "z.txt"))
        bessel_zeros(4, 2)
        assert (tmp_path / "z.txt").exists()
    finally:
        set_zero_cache(old)


def test_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BAGRES_CACHE_DIR", str(tmp_path))
    assert ZeroCache.from_env().path == tmp_path / "bessel_zeros.txt"
    monkeypatch.delenv("BAGRES_CACHE_DIR")
    assert ZeroCache.from_env().path is None
