"""Uniform periodic grids, spinor fields sampled on them, and quadrature.

The torus ``[-L, L)^N`` stands in for ``R^N``.  Spatial nodes are
``x_j = (j - n/2) dx`` and the dual frequency nodes are
``xi_k = (k - n/2) dxi`` with ``dx = 2L/n`` and ``dxi = pi/L``, so that
``dx * dxi * n = 2 pi`` on every axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Grid",
    "SpinorField",
    "quadrature_sum",
    "gaussian_packet",
    "random_band_limited",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)^N`` with ``n`` points per axis.

    Parameters
    ----------
    N : int
        Space dimension.
    n : int
        Points per axis; a power of two, at least 4.
    L : float
        Half-width of the periodic box.
    """

    N: int
    n: int
    L: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"dimension must be >= 1, got {self.N}")
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 4, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"half-width must be positive, got {self.L}")

    @classmethod
    def from_config(cls, cfg: dict) -> "Grid":
        return cls(N=int(cfg["N"]), n=int(cfg["n"]), L=float(cfg["L"]))

    def to_config(self) -> dict:
        return {"N": self.N, "n": self.n, "L": self.L}

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.N

    @property
    def size(self) -> int:
        return self.n**self.N

    @property
    def x(self) -> np.ndarray:
        """Spatial nodes along one axis."""
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def xi(self) -> np.ndarray:
        """Frequency nodes along one axis, ascending."""
        return (np.arange(self.n) - self.n // 2) * self.dxi

    def mesh(self) -> np.ndarray:
        """Spatial coordinates, shape ``(N, n, ..., n)``."""
        return np.stack(np.meshgrid(*([self.x] * self.N), indexing="ij"))

    def freq_mesh(self) -> np.ndarray:
        """Frequency coordinates, shape ``(N, n, ..., n)``."""
        return np.stack(np.meshgrid(*([self.xi] * self.N), indexing="ij"))

    def refined(self, factor: int = 2) -> "Grid":
        """Same box, ``factor`` times as many points per axis."""
        return Grid(self.N, self.n * factor, self.L)


@dataclass(frozen=True, eq=False)
class SpinorField:
    """``C^m``-valued samples on a grid.

    ``data`` has shape ``(m, n, ..., n)``.  ``space`` is ``"x"`` for
    samples at the spatial nodes and ``"xi"`` for samples at the
    frequency nodes (the output of :func:`~dirac_modspace.spectral.forward_ft`).
    """

    grid: Grid
    data: np.ndarray
    space: str = "x"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == self.grid.N:
            data = data[None]
        if data.shape[1:] != self.grid.shape:
            raise ValueError(
                f"data shape {data.shape} does not match grid shape (m,) + {self.grid.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("spinor field contains non-finite entries")
        if self.space not in ("x", "xi"):
            raise ValueError(f"space must be 'x' or 'xi', got {self.space!r}")
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def spacing(self) -> float:
        return self.grid.dx if self.space == "x" else self.grid.dxi

    def with_data(self, data) -> "SpinorField":
        return SpinorField(self.grid, data, self.space)

    def norm(self, p: float = 2.0) -> float:
        return quadrature_sum(self, p)

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_data(self.data - other.data)

    def __mul__(self, c):
        return self.with_data(self.data * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.with_data(self.data / c)

    def __neg__(self):
        return self.with_data(-self.data)


def _check_compatible(a: SpinorField, b: SpinorField):
    if not isinstance(b, SpinorField):
        raise TypeError(f"expected SpinorField, got {type(b).__name__}")
    if a.grid != b.grid or a.space != b.space or a.m != b.m:
        raise ValueError("spinor fields live on different grids or have different component counts")


def quadrature_sum(f: SpinorField, p: float = 2.0) -> float:
    """Discrete ``L^p`` norm ``(sum |f|^p h^N)^(1/p)`` with Euclidean ``|.|``.

    ``h`` is the node spacing of the space the field lives in.  ``p`` may be
    ``np.inf``, in which case the maximum pointwise magnitude is returned.
    """
    if not p >= 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    mag = np.sqrt(np.sum(np.abs(f.data) ** 2, axis=0))
    if np.isinf(p):
        return float(mag.max())
    w = f.spacing**f.grid.N
    return float((np.sum(mag**p) * w) ** (1.0 / p))


def gaussian_packet(
    grid: Grid,
    spinor: Sequence[complex],
    center: Sequence[float] | float = 0.0,
    width: float = 1.0,
    momentum: Sequence[float] | float = 0.0,
) -> SpinorField:
    """Gaussian wave packet ``v exp(-|x-c|^2 / (2 w^2) + i k.x)``."""
    x = grid.mesh()
    c = np.broadcast_to(np.asarray(center, dtype=float), (grid.N,))
    k = np.broadcast_to(np.asarray(momentum, dtype=float), (grid.N,))
    d = x - c.reshape((grid.N,) + (1,) * grid.N)
    phase = np.tensordot(k, x, axes=1)
    env = np.exp(-np.sum(d**2, axis=0) / (2.0 * width**2) + 1j * phase)
    v = np.asarray(spinor, dtype=complex).reshape((-1,) + (1,) * grid.N)
    return SpinorField(grid, v * env)


def random_band_limited(
    grid: Grid,
    m: int,
    rng: np.random.Generator,
    cutoff: float = 4.0,
    taper: float | None = None,
) -> SpinorField:
    """Random field whose spectrum is supported in ``|xi| <= cutoff``.

    Coefficients are complex Gaussian, optionally shaped by a Gaussian
    taper of width ``taper`` in frequency.
    """
    from .spectral import inverse_ft

    xi = grid.freq_mesh()
    r2 = np.sum(xi**2, axis=0)
    coef = rng.standard_normal((m,) + grid.shape) + 1j * rng.standard_normal((m,) + grid.shape)
    mask = (r2 <= cutoff**2).astype(float)
    if taper is not None:
        mask = mask * np.exp(-r2 / (2.0 * taper**2))
    return inverse_ft(SpinorField(grid, coef * mask, space="xi"))
