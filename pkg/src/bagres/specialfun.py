"""Integer-order Bessel functions and their positive zeros.

Function values are delegated to :mod:`scipy.special` (Amos / Cephes), which
is accurate to a few ulps over the whole range used here. Zeros are located by
a sign-change scan followed by bisection to machine precision, and can be
persisted in a small plain-text cache (one ``order index value`` record per
line, 15 significant digits).
"""

from __future__ import annotations

import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from .core import BagresError, NumericalFailure

log = logging.getLogger(__name__)

# Consecutive positive zeros of J_n are at least ~2.9 apart for every n >= 0,
# so a scan step of 0.25 can never hide a pair of roots inside one cell.
_SCAN_STEP = 0.25
ZERO_TOL = 1e-12


def bessel_j(order: int, x):
    """``J_order(x)`` for integer ``order >= 0`` and ``x >= 0``."""
    if order < 0 or int(order) != order:
        raise BagresError(f"order must be a non-negative integer, got {order!r}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BagresError("x must be >= 0")
    out = special.jv(int(order), x)
    return float(out) if out.ndim == 0 else out


def bessel_j_signed(k: int, x):
    """``J_k(x)`` for any integer ``k`` via ``J_{-n} = (-1)^n J_n``; ``x`` may be an array."""
    n = abs(int(k))
    val = special.jv(n, x)
    return -val if (k < 0 and n % 2) else val


def bessel_i_scaled(k: int, x):
    """``exp(-x) I_|k|(x)`` (``I_{-n} = I_n`` for integer order)."""
    return special.ive(abs(int(k)), x)


@dataclass(frozen=True)
class BesselZeroTable:
    order: int
    zeros: tuple[float, ...]
    tol: float = ZERO_TOL

    def __post_init__(self):
        z = np.asarray(self.zeros)
        if z.size and (np.any(z <= 0) or np.any(np.diff(z) <= 0)):
            raise NumericalFailure(f"zeros of J_{self.order} not strictly increasing and positive")

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, i):
        return self.zeros[i]

    def residuals(self) -> np.ndarray:
        return np.abs(special.jv(self.order, np.asarray(self.zeros)))


def _bisect_zero(order: int, a: float, b: float, fa: float) -> float:
    """Bisect ``J_order`` on ``[a, b]`` until the midpoint stops moving."""
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = special.jv(order, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    # return the endpoint with the smaller residual
    return a if abs(special.jv(order, a)) <= abs(special.jv(order, b)) else b


def _compute_zeros(order: int, count: int, tol: float) -> list[float]:
    zeros: list[float] = []
    # no zero of J_n lies below n (and J_0 has none below 2.4)
    start = max(0.5, order - 1.0) if order > 0 else 0.5
    x0 = start
    while len(zeros) < count:
        # chunked vectorized scan, sized to cover the remaining zeros
        span = (count - len(zeros) + 2) * math.pi + 4.0
        xs = x0 + _SCAN_STEP * np.arange(int(span / _SCAN_STEP) + 1)
        fs = special.jv(order, xs)
        idx = np.nonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) < 0)[0]
        for i in idx:
            z = _bisect_zero(order, xs[i], xs[i + 1], fs[i])
            if abs(special.jv(order, z)) > tol:
                raise NumericalFailure(
                    f"bisection for J_{order} on [{xs[i]}, {xs[i + 1]}] stalled at |J|={abs(special.jv(order, z)):.3e}"
                )
            zeros.append(float(z))
            if len(zeros) == count:
                break
        exact = np.nonzero(fs == 0.0)[0]
        if exact.size:
            raise NumericalFailure(f"scan of J_{order} hit an exact zero at {xs[exact[0]]}; cannot isolate sign change")
        x0 = xs[-1]
        if x0 > 1e7:
            raise NumericalFailure(f"could not bracket {count} zeros of J_{order}")
    return zeros


class ZeroCache:
    """Plain-text cache of Bessel zeros, regenerated when missing, stale or corrupt.

    File layout::

        # bessel zeros tol=1e-12
        <order> <index> <value %.15g>
    """

    def __init__(self, path: str | os.PathLike | None = None, tol: float = ZERO_TOL):
        self.path = Path(path) if path is not None else None
        self.tol = tol
        self._mem: dict[int, list[float]] = {}
        self._loaded = False

    @classmethod
    def from_env(cls, tol: float = ZERO_TOL) -> "ZeroCache":
        root = os.environ.get("BAGRES_CACHE_DIR")
        if not root:
            return cls(None, tol)
        return cls(Path(root) / "bessel_zeros.txt", tol)

    def _load(self):
        self._loaded = True
        if self.path is None or not self.path.exists():
            return
        table: dict[int, dict[int, float]] = {}
        try:
            lines = self.path.read_text().splitlines()
            header = lines[0] if lines else ""
            if not header.startswith("#") or f"tol={self.tol:.3g}" not in header:
                raise ValueError("missing or stale header")
            for line in lines[1:]:
                if not line.strip():
                    continue
                o, i, v = line.split()
                table.setdefault(int(o), {})[int(i)] = float(v)
            for o, entries in table.items():
                vals = [entries[i] for i in range(1, len(entries) + 1)]
                # values are stored at 15 digits, so re-polish before trusting them
                polished = [self._polish(o, v) for v in vals]
                BesselZeroTable(o, tuple(polished), self.tol)
                self._mem[o] = polished
        except Exception as exc:  # corrupt cache is derived data: rebuild it
            log.warning("discarding Bessel zero cache %s (%s)", self.path, exc)
            self._mem.clear()

    def _polish(self, order: int, value: float) -> float:
        a, b = value - 1e-9 * max(1.0, value), value + 1e-9 * max(1.0, value)
        fa, fb = special.jv(order, a), special.jv(order, b)
        if np.sign(fa) * np.sign(fb) >= 0:
            raise ValueError(f"cached zero {value} of J_{order} does not bracket a root")
        return _bisect_zero(order, a, b, fa)

    def _save(self):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        rows = [f"# bessel zeros tol={self.tol:.3g}"]
        for o in sorted(self._mem):
            rows.extend(f"{o} {i} {v:.15g}" for i, v in enumerate(self._mem[o], start=1))
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".bessel_zeros.")
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(rows) + "\n")
        os.replace(tmp, self.path)

    def get(self, order: int, count: int) -> BesselZeroTable:
        if not self._loaded:
            self._load()
        have = self._mem.get(order, [])
        if len(have) < count:
            have = _compute_zeros(order, count, self.tol)
            self._mem[order] = have
            self._save()
        return BesselZeroTable(order, tuple(have[:count]), self.tol)


_default_cache = ZeroCache(None)


def set_zero_cache(cache: ZeroCache) -> None:
    """Install the process-wide zero cache (the CLI points it at ``BAGRES_CACHE_DIR``)."""
    global _default_cache
    _default_cache = cache


def bessel_zeros(order: int, count: int, tol: float = ZERO_TOL) -> BesselZeroTable:
    """First ``count`` positive zeros of ``J_order``, each with ``|J| <= tol``."""
    if order < 0 or int(order) != order:
        raise BagresError(f"order must be a non-negative integer, got {order!r}")
    if count < 1:
        raise BagresError("count must be >= 1")
    if tol == _default_cache.tol:
        return _default_cache.get(int(order), int(count))
    return BesselZeroTable(order, tuple(_compute_zeros(int(order), int(count), tol)), tol)


def zeros_below(order: int, x_max: float) -> np.ndarray:
    """All positive zeros of ``J_order`` that are ``<= x_max``."""
    if x_max <= 0:
        return np.empty(0)
    # McMahon-type count estimate, padded
    count = max(1, int((x_max - order) / math.pi) + 3)
    while True:
        z = np.asarray(bessel_zeros(order, count).zeros)
        if z[-1] > x_max:
            return z[z <= x_max]
        count *= 2
