"""Domain types and parameter conversions shared by every module.

The boundary coupling ``tau`` of the generalized MIT bag family and the
quantum-dot angle ``eta`` describe the same boundary condition on the disk::

    cos(eta) = 1 / cosh(tau),    sin(eta) = -tanh(tau)

with ``tau = +inf`` <-> ``eta = -pi/2`` and ``tau = -inf`` <-> ``eta = +pi/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "BagresError",
    "NumericalFailure",
    "BoundaryParam",
    "SpectralWindow",
    "ChannelRange",
    "LabConfig",
    "tau_to_eta",
    "eta_to_tau",
    "parse_tau",
]


class BagresError(ValueError):
    """Invalid input to one of the lab operations."""


class NumericalFailure(RuntimeError):
    """A numerical routine could not deliver its contract (bracketing, convergence)."""


def tau_to_eta(tau: float) -> float:
    """Map the bag coupling ``tau`` to the quantum-dot angle ``eta``.

    ``atan2(-tanh tau, 1/cosh tau)`` reproduces both defining identities and
    returns values in ``[-pi/2, pi/2]``; the infinite couplings land on the
    endpoints.
    """
    tau = float(tau)
    if math.isnan(tau):
        raise BagresError("tau must not be NaN")
    if math.isinf(tau):
        return -math.copysign(math.pi / 2, tau)
    if abs(tau) > 700:  # cosh overflows; sech is below the smallest normal anyway
        return -math.copysign(math.pi / 2, tau)
    return math.atan2(-math.tanh(tau), 1.0 / math.cosh(tau))


def eta_to_tau(eta: float) -> float:
    """Inverse of :func:`tau_to_eta` on ``[-pi/2, pi/2]``.

    ``tau = -asinh(tan eta)``; the endpoints map to ``-+inf``.
    """
    eta = float(eta)
    half = math.pi / 2
    if not (-half - 1e-15 <= eta <= half + 1e-15):
        raise BagresError(f"eta={eta!r} outside [-pi/2, pi/2]")
    if eta <= -half + 1e-15:
        return math.inf
    if eta >= half - 1e-15:
        return -math.inf
    # sin/cos instead of tan keeps the round trip accurate near the endpoints
    return -math.asinh(math.sin(eta) / math.cos(eta))


def parse_tau(text: str | float) -> float:
    """Accept ``+inf``, ``-inf``, ``inf`` or any float literal."""
    if isinstance(text, (int, float)):
        return float(text)
    s = text.strip().lower()
    if s in ("+inf", "inf", "+infinity", "infinity"):
        return math.inf
    if s in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(s)
    except ValueError as exc:
        raise BagresError(f"cannot parse tau from {text!r}") from exc


@dataclass(frozen=True)
class BoundaryParam:
    """Boundary coupling, mass and disk radius.

    Construct from ``tau`` (default) or via :meth:`from_eta`; ``eta`` is kept
    consistent automatically.
    """

    tau: float
    mass: float = 1.0
    radius: float = 1.0
    eta: float = field(init=False)

    def __post_init__(self):
        if math.isnan(self.tau):
            raise BagresError("tau must not be NaN")
        if not (self.mass >= 0 and math.isfinite(self.mass)):
            raise BagresError(f"mass must be finite and >= 0, got {self.mass!r}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise BagresError(f"radius must be finite and > 0, got {self.radius!r}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "eta", tau_to_eta(self.tau))

    @classmethod
    def from_eta(cls, eta: float, mass: float = 1.0, radius: float = 1.0) -> "BoundaryParam":
        return cls(eta_to_tau(eta), mass, radius)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.tau)

    @property
    def kind(self) -> str:
        if self.tau == math.inf:
            return "zigzag_plus"
        if self.tau == -math.inf:
            return "zigzag_minus"
        return "finite_tau"

    def with_tau(self, tau: float) -> "BoundaryParam":
        return replace(self, tau=tau)

    def boundary_weights(self) -> tuple[float, float]:
        """``(a, b)`` with ``a**2 + b**2 = 1`` and boundary relation ``a f(R) = b g(R)``.

        The radial relation ``f(R) = exp(-tau) g(R)`` is rescaled with
        ``a = e^{tau/2}/sqrt(2 cosh tau)``, ``b = e^{-tau/2}/sqrt(2 cosh tau)``;
        equivalently
        ``a = cos(pi/4 + eta/2)``, ``b = sin(pi/4 + eta/2)``. Both stay bounded
        for all couplings, including the zigzag endpoints.
        """
        half = 0.5 * (math.pi / 2 + self.eta)
        return math.cos(half), math.sin(half)


@dataclass(frozen=True)
class SpectralWindow:
    lo: float
    hi: float
    max_count: int = 10_000

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise BagresError(f"window needs lo < hi, got {self.lo}:{self.hi}")
        if self.max_count < 1:
            raise BagresError("max_count must be positive")

    @classmethod
    def parse(cls, text: str, max_count: int = 10_000) -> "SpectralWindow":
        try:
            lo, hi = (float(t) for t in text.split(":"))
        except ValueError as exc:
            raise BagresError(f"window must look like lo:hi, got {text!r}") from exc
        return cls(lo, hi, max_count)

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class ChannelRange:
    """Inclusive range of angular indices ``k``.

    Channel ``k`` carries ``e^{ik theta}`` in the upper spinor component and
    ``e^{i(k+1) theta}`` in the lower one. The map ``k -> -k-1`` exchanges the
    components; ranges of the form ``[-K-1, K]`` are closed under it.
    """

    k_min: int
    k_max: int

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise BagresError(f"k_min={self.k_min} > k_max={self.k_max}")

    def __iter__(self):
        return iter(range(self.k_min, self.k_max + 1))

    def __len__(self):
        return self.k_max - self.k_min + 1

    def conjugate(self) -> "ChannelRange":
        return ChannelRange(-self.k_max - 1, -self.k_min - 1)


def conjugate_channel(k: int) -> int:
    """Channel paired with ``k`` by the ``tau -> -tau``, ``E -> -E`` symmetry."""
    return -k - 1


@dataclass(frozen=True)
class LabConfig:
    grid_points: int = 400
    channel_range: ChannelRange = ChannelRange(-9, 8)
    spectral_tol: float = 1e-6
    root_tol: float = 1e-12
    power_iter_tol: float = 1e-12
    seed: int = 42

    def __post_init__(self):
        if not isinstance(self.channel_range, ChannelRange):
            lo, hi = self.channel_range
            object.__setattr__(self, "channel_range", ChannelRange(int(lo), int(hi)))
        if self.grid_points < 16:
            raise BagresError("grid_points must be >= 16")
        for name in ("spectral_tol", "root_tol", "power_iter_tol"):
            if not getattr(self, name) > 0:
                raise BagresError(f"{name} must be > 0")

    def rng(self, *stream: int) -> np.random.Generator:
        """Independent generator per task, derived from ``seed``."""
        # SeedSequence entropy must be non-negative; channel indices can be negative
        return np.random.default_rng([self.seed & 0xFFFFFFFF, *(int(s) & 0xFFFFFFFF for s in stream)])

    def to_dict(self) -> dict:
        return {
            "grid_points": self.grid_points,
            "channel_range": [self.channel_range.k_min, self.channel_range.k_max],
            "spectral_tol": self.spectral_tol,
            "root_tol": self.root_tol,
            "power_iter_tol": self.power_iter_tol,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabConfig":
        data = dict(data)
        if "channel_range" in data:
            lo, hi = data.pop("channel_range")
            data["channel_range"] = ChannelRange(int(lo), int(hi))
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise BagresError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)
