"""Spectral lab for generalized MIT bag and zigzag Dirac operators on the disk."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BagresError,
    BoundaryParam,
    ChannelRange,
    LabConfig,
    NumericalFailure,
    SpectralWindow,
    eta_to_tau,
    tau_to_eta,
)

__all__ = [
    "BagresError",
    "BoundaryParam",
    "ChannelRange",
    "LabConfig",
    "NumericalFailure",
    "SpectralWindow",
    "eta_to_tau",
    "tau_to_eta",
]
