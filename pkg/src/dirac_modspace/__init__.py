"""Wave packet transform numerics for Dirac-type systems with matrix potentials."""

from importlib.metadata import PackageNotFoundError, version

from .dirac import CliffordSystem, preset, projections
from .grid import Grid, SpinorField, gaussian_packet, quadrature_sum
from .modspace import NormSpec, mod_norm, mixed_norm
from .spectral import MultiplierSymbol, apply_multiplier, bessel, forward_ft, inverse_ft
from .wavepacket import PhaseSpaceField, Window, gaussian_window, wp_adjoint, wp_invert, wp_transform

try:
    __version__ = version("dirac-modspace")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "CliffordSystem",
    "Grid",
    "MultiplierSymbol",
    "NormSpec",
    "PhaseSpaceField",
    "SpinorField",
    "Window",
    "apply_multiplier",
    "bessel",
    "forward_ft",
    "gaussian_packet",
    "gaussian_window",
    "inverse_ft",
    "mixed_norm",
    "mod_norm",
    "preset",
    "projections",
    "quadrature_sum",
    "wp_adjoint",
    "wp_invert",
    "wp_transform",
]
