"""Semi-analytic spectra of the disk Dirac operators.

Separation of variables: in channel ``k`` the spinor is::

    u = f(r) e^{ik theta},    v = i g(r) e^{i(k+1) theta}

so the eigenvalue problem becomes the real radial system::

    m f + (g' + (k+1) g / r) = E f
    (-f' + k f / r) - m g    = E g

and the boundary condition ``u = -i e^{-tau} (sigma . nu) v`` turns into
``f(R) = e^{-tau} g(R)``. For ``|E| > m`` and ``p = sqrt(E^2 - m^2)`` the
regular solution is ``f = J_k(pr)``, ``g = p J_{k+1}(pr) / (E + m)``, giving
the secular function::

    F_k(E) = a (E + m) J_k(pR) - b p J_{k+1}(pR)

with ``(a, b) = (cos(pi/4 + eta/2), sin(pi/4 + eta/2))`` (see
:meth:`BoundaryParam.boundary_weights`). ``F_k`` is smooth in ``E`` on both
branches ``E > m`` and ``E < -m``; at the zigzag endpoints it reduces to
``J_k(pR) = 0`` (``tau = +inf``) or ``J_{k+1}(pR) = 0`` (``tau = -inf``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BagresError, BoundaryParam, ChannelRange, NumericalFailure, SpectralWindow
from .specialfun import ZERO_TOL, bessel_i_scaled, bessel_j_signed, bessel_zeros, zeros_below

__all__ = [
    "SecularProblem",
    "Eigenvalue",
    "SpectralResult",
    "dirichlet_disk_eigs",
    "zigzag_spectrum_disk",
    "secular_value",
    "subgap_value",
    "disk_dirac_eigs",
    "lambda1_plus",
]

# bracketing density: samples per unit of pR
SAMPLES_PER_UNIT = 40


@dataclass(frozen=True)
class SecularProblem:
    channel: int
    params: BoundaryParam

    def __post_init__(self):
        if not self.params.finite:
            raise BagresError("SecularProblem needs finite tau; use zigzag_spectrum_disk for tau = +-inf")


@dataclass(frozen=True)
class Eigenvalue:
    value: float
    channel: int | None
    residual: float
    infinite_multiplicity: bool = False


@dataclass
class SpectralResult:
    eigenvalues: list[Eigenvalue]
    provenance: str
    params: BoundaryParam
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.provenance not in ("oracle", "discrete"):
            raise BagresError(f"unknown provenance {self.provenance!r}")
        self.eigenvalues = sorted(self.eigenvalues, key=lambda e: (e.value, -1e9 if e.channel is None else e.channel))
        if self.provenance == "oracle" and self.params.finite:
            m = self.params.mass
            bad = [e.value for e in self.eigenvalues if -m < e.value < m]
            if bad:
                raise NumericalFailure(f"oracle produced eigenvalues inside the gap (-m, m): {bad}")

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues])

    def for_channel(self, k: int) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues if e.channel == k])

    def __len__(self):
        return len(self.eigenvalues)


def dirichlet_disk_eigs(radius: float, count: int) -> list[float]:
    """First ``count`` Dirichlet Laplacian eigenvalues of the disk, with multiplicity.

    Order-``n`` values (``n >= 1``) appear twice, for ``e^{+-in theta}``.
    """
    if not radius > 0:
        raise BagresError("radius must be > 0")
    if count < 1:
        raise BagresError("count must be >= 1")
    # grow the cutoff until the count is reached; every order whose first zero
    # lies below the cutoff contributes
    cutoff = bessel_zeros(0, count).zeros[-1]
    vals: list[float] = []
    for n in range(0, int(cutoff) + 2):
        z = zeros_below(n, cutoff)
        for j in z:
            vals.extend([j * j] * (1 if n == 0 else 2))
    vals.sort()
    if len(vals) < count:  # pragma: no cover - j_{0,count} bounds count zeros from order 0 alone
        raise NumericalFailure("insufficient Dirichlet eigenvalues enumerated")
    return [float(v) / radius**2 for v in vals[:count]]


def _kernel_channels(tau: float, channels: ChannelRange | None):
    if channels is None:
        return None
    return [k for k in channels if (k <= -1 if tau > 0 else k >= 0)]


def zigzag_spectrum_disk(params: BoundaryParam, window: SpectralWindow,
                         channels: ChannelRange | None = None) -> SpectralResult:
    """Closed-form spectrum ``{-+m} U {+-sqrt(lambda_D + m^2)}`` of the zigzag operators.

    With ``channels`` each value is attributed to its angular channel: for
    ``tau = +inf`` channel ``k`` carries the zeros of ``J_|k|`` and the
    infinite-multiplicity point ``-m`` (one state per channel ``k <= -1``, with
    lower component ``bar z^{|k|-1}``); for ``tau = -inf`` channel ``k`` carries
    the zeros of ``J_|k+1|`` and ``+m`` lives in channels ``k >= 0``.
    Without ``channels`` every channel that has a value in the window is listed
    and the ``-+m`` point appears once, unattributed.
    """
    if params.finite:
        raise BagresError("zigzag_spectrum_disk needs tau = +inf or -inf")
    m, R = params.mass, params.radius
    plus = params.tau > 0
    special_point = -m if plus else m
    p_max = math.sqrt(max(window.lo**2, window.hi**2, m * m) - m * m)
    x_max = p_max * R
    if channels is None:
        orders = range(0, int(x_max) + 2)
        pairs = []
        for n in orders:
            ks = {n, -n} if plus else {n - 1, -n - 1}
            pairs.extend((k, n) for k in sorted(ks))
    else:
        pairs = [(k, abs(k) if plus else abs(k + 1)) for k in channels]

    eigs: list[Eigenvalue] = []
    for k, n in pairs:
        for j in zeros_below(n, x_max):
            lam = math.sqrt((j / R) ** 2 + m * m)
            res = abs(float(bessel_j_signed(n, j)))
            for s in (1.0, -1.0):
                if s * lam in window:
                    eigs.append(Eigenvalue(s * lam, k, res))
    if special_point in window:
        kern = _kernel_channels(params.tau, channels)
        if kern is None:
            eigs.append(Eigenvalue(special_point, None, 0.0, True))
        else:
            eigs.extend(Eigenvalue(special_point, k, 0.0, True) for k in kern)
    eigs.sort(key=lambda e: e.value)
    return SpectralResult(_cap(eigs, window), "oracle", params)


def _cap(eigs: list[Eigenvalue], window: SpectralWindow) -> list[Eigenvalue]:
    if len(eigs) <= window.max_count:
        return eigs
    keep = sorted(eigs, key=lambda e: abs(e.value))[: window.max_count]
    return sorted(keep, key=lambda e: e.value)


def secular_value(E: float, problem: SecularProblem) -> float:
    """``F_k(E)`` for ``|E| > m``; its zeros are the channel-``k`` eigenvalues."""
    prm = problem.params
    m, R, k = prm.mass, prm.radius, problem.channel
    if not abs(E) > m:
        raise BagresError(f"secular_value needs |E| > m (E={E}, m={m}); the gap holds no roots")
    p = math.sqrt(E * E - m * m)
    a, b = prm.boundary_weights()
    val = a * (E + m) * bessel_j_signed(k, p * R) - b * p * bessel_j_signed(k + 1, p * R)
    val = float(val)
    if not math.isfinite(val):
        raise NumericalFailure(f"non-finite secular value at E={E}")
    return val


def subgap_value(E: float, problem: SecularProblem) -> float:
    """Secular function continued to ``|E| < m`` (``p = i kappa``), up to the factor ``i^k e^{kappa R}``.

    Equals ``a (E+m) I_|k|(kappa R) + b kappa I_|k+1|(kappa R)`` scaled by
    ``e^{-kappa R}``; both terms are non-negative and the first is strictly
    positive for finite ``tau``, so the gap contains no eigenvalue.
    """
    prm = problem.params
    m, R, k = prm.mass, prm.radius, problem.channel
    if not abs(E) < m:
        raise BagresError("subgap_value needs |E| < m")
    kappa = math.sqrt(m * m - E * E)
    a, b = prm.boundary_weights()
    x = kappa * R
    return float(a * (E + m) * bessel_i_scaled(k, x) + b * kappa * bessel_i_scaled(k + 1, x))


def _branch_function(problem: SecularProblem, sign: int):
    """Secular function on one branch as a function of ``p``, with positive factors removed."""
    prm = problem.params
    m, R, k = prm.mass, prm.radius, problem.channel
    a, b = prm.boundary_weights()

    def fn(p):
        p = np.asarray(p, dtype=float)
        E_abs = np.sqrt(p * p + m * m)
        jk = bessel_j_signed(k, p * R)
        jk1 = bessel_j_signed(k + 1, p * R)
        if sign > 0:
            if m > 0:
                return a * (E_abs + m) * jk - b * p * jk1
            return a * jk - b * jk1  # divided by p
        # E + m = -p^2 / (|E| + m); divide F by p
        return -(a * p * jk / (E_abs + m) + b * jk1)

    return fn


def _branch_p_range(sign: int, window: SpectralWindow, m: float):
    """``[p_lo, p_hi]`` covering ``window`` on the branch, or ``None``."""
    if sign > 0:
        lo, hi = max(window.lo, m), window.hi
    else:
        lo, hi = max(-window.hi, m), -window.lo
    if hi <= m or hi <= lo:
        return None
    p_lo = math.sqrt(max(lo * lo - m * m, 0.0))
    p_hi = math.sqrt(hi * hi - m * m)
    return p_lo, p_hi


def _bracket_grid(p_lo: float, p_hi: float, k: int, R: float, density: int) -> np.ndarray:
    x_hi = p_hi * R
    n_uniform = max(2, int(math.ceil((p_hi - p_lo) * R * density)) + 1)
    pts = [np.linspace(p_lo, p_hi, n_uniform)]
    # geometric refinement towards p = 0, where near-threshold roots live
    if p_lo == 0.0:
        pts.append(np.geomspace(1e-12 / R, 1.0 / (density * R), 12 * density // SAMPLES_PER_UNIT * 10 + 40))
    for n in {abs(k), abs(k + 1)}:
        z = zeros_below(n, x_hi) / R
        pts.append(z[(z > p_lo) & (z < p_hi)])
    grid = np.unique(np.concatenate(pts))
    return grid[grid > 0.0] if p_lo == 0.0 else grid


def _bisect(fn, a: float, b: float, fa: float) -> float:
    for _ in range(300):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = float(fn(mid))
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def _branch_roots(problem: SecularProblem, sign: int, window: SpectralWindow, density: int) -> list[float]:
    prm = problem.params
    rng = _branch_p_range(sign, window, prm.mass)
    if rng is None:
        return []
    fn = _branch_function(problem, sign)
    grid = _bracket_grid(*rng, problem.channel, prm.radius, density)
    vals = fn(grid)
    if not np.all(np.isfinite(vals)):
        raise NumericalFailure(f"non-finite secular values in channel {problem.channel}")
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        p = _bisect(fn, grid[i], grid[i + 1], vals[i])
        roots.append(sign * math.sqrt(p * p + prm.mass**2))
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(sign * math.sqrt(grid[i] ** 2 + prm.mass**2))
    return [E for E in roots if E in window]


def _channel_roots(problem: SecularProblem, window: SpectralWindow) -> tuple[list[float], str | None]:
    """Roots of one channel, with a grid-doubling consistency check."""
    density = SAMPLES_PER_UNIT
    roots = _branch_roots(problem, 1, window, density) + _branch_roots(problem, -1, window, density)
    warning = None
    for _ in range(3):
        finer = _branch_roots(problem, 1, window, 2 * density) + _branch_roots(problem, -1, window, 2 * density)
        if len(finer) == len(roots):
            break
        warning = (f"channel {problem.channel}: bracketing grid at {density}/unit found {len(roots)} roots, "
                   f"{2 * density}/unit found {len(finer)}; kept the finer result")
        roots, density = finer, 2 * density
    else:
        raise NumericalFailure(f"channel {problem.channel}: root count did not stabilize under grid refinement")
    return sorted(roots), warning


def disk_dirac_eigs(params: BoundaryParam, channels: ChannelRange, window: SpectralWindow,
                    root_tol: float = 1e-12) -> SpectralResult:
    """All eigenvalues of ``H_tau`` on the disk per channel inside ``window``."""
    if not params.finite:
        raise BagresError("disk_dirac_eigs needs finite tau")
    eigs: list[Eigenvalue] = []
    warnings: list[str] = []
    for k in channels:
        prob = SecularProblem(k, params)
        roots, warn = _channel_roots(prob, window)
        if warn:
            warnings.append(warn)
        for E in roots:
            res = abs(secular_value(E, prob))
            # residual is measured on F normalized by its Bessel-scale magnitude
            scale = max(1.0, abs(E) + params.mass)
            if res > max(root_tol, 64 * np.finfo(float).eps) * scale:
                raise NumericalFailure(f"channel {k}: root {E} has secular residual {res:.3e}")
            eigs.append(Eigenvalue(E, k, res))
    return SpectralResult(_cap(eigs, window), "oracle", params, warnings)


def lambda1_plus(params: BoundaryParam, channels: ChannelRange, root_tol: float = 1e-12) -> float:
    """Smallest eigenvalue above ``m`` over ``channels``.

    The search window grows until a root is found; the lowest Dirichlet level
    bounds the answer from above for large ``tau`` but not for ``tau < 0``.
    """
    m, R = params.mass, params.radius
    hi = math.sqrt((bessel_zeros(0, 1).zeros[0] / R) ** 2 + m * m) + 1.0
    for _ in range(20):
        res = disk_dirac_eigs(params, channels, SpectralWindow(m, hi), root_tol)
        above = res.values[res.values > m]
        if above.size:
            return float(above.min())
        hi *= 2
    raise NumericalFailure("no eigenvalue above m found")
