"""Wave packet (short-time Fourier) transform of spinor fields.

``W_phi f(x, xi) = int conj(phi(x - y)) f(y) exp(-i y.xi) dy``

is evaluated on the full ``(x, xi)`` product grid: for every ``x`` the
windowed field is summed against ``exp(-i y.xi)`` by one DFT.  Window
arguments ``x - y`` are taken as minimum-image differences on the torus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .grid import Grid, SpinorField
from .spectral import dft_sum, forward_ft, idft_sum, inverse_ft

__all__ = [
    "Window",
    "gaussian_window",
    "PhaseSpaceField",
    "IllConditionedInversion",
    "pair_values",
    "pair_transform",
    "wp_transform",
    "wp_blocks",
    "wp_adjoint",
    "wp_invert",
    "wp_transform_matrix_window",
]


class IllConditionedInversion(ValueError):
    """Raised when the analysis and synthesis windows are nearly orthogonal."""


@dataclass(frozen=True, eq=False)
class Window:
    """Scalar window sampled on a grid.

    Parameters
    ----------
    grid : Grid
    samples : ndarray
        Complex samples of shape ``grid.shape``.
    gaussian_width : float, optional
        Set when the window is the Gaussian ``exp(-|x|^2 / (2 w^2))`` up to a
        constant factor; derivatives are then evaluated analytically.
    check_tail : bool
        Enforce that the mass outside ``|x|_inf <= L/2`` is below ``1e-10``
        of the total.
    """

    grid: Grid
    samples: np.ndarray
    gaussian_width: float | None = None
    check_tail: bool = True
    _derivatives: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != self.grid.shape:
            raise ValueError(f"window samples have shape {s.shape}, expected {self.grid.shape}")
        object.__setattr__(self, "samples", s)
        total = np.sum(np.abs(s) ** 2)
        if not total > 0:
            raise ValueError("window must be nonzero")
        if self.check_tail:
            inside = np.all(np.abs(self.grid.mesh()) <= self.grid.L / 2, axis=0)
            tail = np.sum(np.abs(s[~inside]) ** 2) / total
            if tail > 1e-10:
                raise ValueError(
                    f"window tail mass {tail:.2e} outside |x| <= L/2 exceeds 1e-10; enlarge the box"
                )

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.dx**self.grid.N))

    def inner(self, other: "Window") -> complex:
        """``<self, other> = sum self * conj(other) dx^N``."""
        if other.grid != self.grid:
            raise ValueError("windows live on different grids")
        return complex(np.sum(self.samples * np.conj(other.samples)) * self.grid.dx**self.grid.N)

    def __mul__(self, c) -> "Window":
        return Window(self.grid, self.samples * c, self.gaussian_width, self.check_tail)

    __rmul__ = __mul__

    def derivative(self, beta: tuple[int, ...]) -> np.ndarray:
        """Samples of ``d^beta phi``, cached per multi-index."""
        beta = tuple(int(b) for b in beta)
        if len(beta) != self.grid.N or min(beta) < 0:
            raise ValueError(f"bad multi-index {beta} for dimension {self.grid.N}")
        if beta not in self._derivatives:
            if not any(beta):
                d = self.samples
            elif self.gaussian_width is not None:
                d = self._gaussian_derivative(beta)
            else:
                d = self._spectral_derivative(beta)
            self._derivatives[beta] = d
        return self._derivatives[beta]

    def _gaussian_derivative(self, beta):
        from numpy.polynomial.hermite import hermval

        s = self.gaussian_width * np.sqrt(2.0)
        x = self.grid.mesh()
        factor = np.ones(self.grid.shape)
        for j, k in enumerate(beta):
            if k:
                c = np.zeros(k + 1)
                c[k] = 1.0
                factor = factor * (-1.0 / s) ** k * hermval(x[j] / s, c)
        return self.samples * factor

    def _spectral_derivative(self, beta):
        xi = self.grid.freq_mesh()
        sym = np.ones(self.grid.shape, dtype=complex)
        for j, k in enumerate(beta):
            sym = sym * (1j * xi[j]) ** k
        F = forward_ft(SpinorField(self.grid, self.samples))
        return inverse_ft(F.with_data(F.data * sym)).data[0]


def gaussian_window(grid: Grid, width: float = 1.0, normalize: bool = True) -> Window:
    """Gaussian window ``exp(-|x|^2 / (2 width^2))``, unit ``L^2`` norm by default."""
    r2 = np.sum(grid.mesh() ** 2, axis=0)
    c = (np.pi * width**2) ** (-grid.N / 4) if normalize else 1.0
    return Window(grid, c * np.exp(-r2 / (2.0 * width**2)), gaussian_width=width)


@dataclass(frozen=True, eq=False)
class PhaseSpaceField:
    """``C^m``-valued samples on the ``(x, xi)`` product grid.

    ``data`` has shape ``(m, n, ..., n)`` with ``N`` spatial axes followed by
    ``N`` frequency axes.
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        N = self.grid.N
        if data.ndim == 2 * N:
            data = data[None]
        if data.shape[1:] != self.grid.shape * 2:
            raise ValueError(
                f"data shape {data.shape} does not match (m,) + {self.grid.shape * 2}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("phase-space field contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    def with_data(self, data) -> "PhaseSpaceField":
        return PhaseSpaceField(self.grid, data)

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean norm over components."""
        return np.sqrt(np.sum(np.abs(self.data) ** 2, axis=0))

    def sup(self) -> float:
        return float(self.magnitude().max())

    def l2(self) -> float:
        """``L^2(dx dxi)`` norm with node spacings as weights."""
        w = (self.grid.dx * self.grid.dxi) ** self.grid.N
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) * w))

    def __add__(self, other):
        return self.with_data(self.data + other.data)

    def __sub__(self, other):
        return self.with_data(self.data - other.data)

    def __mul__(self, c):
        return self.with_data(self.data * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_data(-self.data)


def _pair_indices(n: int, N: int, rows: np.ndarray | None = None) -> tuple[np.ndarray, ...]:
    # index of the minimum-image difference a - b along each axis, laid out
    # over 2N axes: first N for a (first axis optionally restricted to rows),
    # last N for b
    b = np.arange(n)
    idx = []
    for d in range(N):
        a = rows if (d == 0 and rows is not None) else np.arange(n)
        diff = (a[:, None] - b[None, :] + n // 2) % n
        shape = [1] * (2 * N)
        shape[d] = diff.shape[0]
        shape[N + d] = n
        idx.append(diff.reshape(shape))
    return tuple(idx)


def pair_values(samples: np.ndarray, N: int, rows: np.ndarray | None = None) -> np.ndarray:
    """``A[..., a, b] = samples[..., a - b]`` over the last ``N`` axes.

    The result has the leading axes of ``samples`` followed by ``N`` axes for
    ``a`` and ``N`` axes for ``b``.  ``rows`` restricts the first ``a`` axis.
    """
    n = samples.shape[-1]
    return samples[(Ellipsis,) + _pair_indices(n, N, rows)]


def _block_rows(grid: Grid, m: int, budget: int = 1 << 22) -> int:
    per_row = m * grid.n ** (2 * grid.N - 1)
    return int(max(1, min(grid.n, budget // max(per_row, 1))))


def pair_transform(kernel: np.ndarray, f: SpinorField) -> PhaseSpaceField:
    """``sum_y K(x, y) f(y) exp(-i y.xi) dy`` for a two-point kernel.

    ``kernel`` has shape ``(x..., y...)`` (scalar) or ``(m, m, x..., y...)``.
    """
    grid, N = f.grid, f.grid.N
    yax = tuple(range(1 + N, 1 + 2 * N))
    fy = f.data.reshape((f.m,) + (1,) * N + grid.shape)
    if kernel.ndim == 2 * N:
        G = kernel[None] * fy
    elif kernel.ndim == 2 * N + 2:
        if kernel.shape[:2] != (f.m, f.m):
            raise ValueError(f"kernel acts on C^{kernel.shape[0]} but field has {f.m} components")
        G = np.einsum("ij...,j...->i...", kernel, np.broadcast_to(fy, (f.m,) + kernel.shape[2:]))
    else:
        raise ValueError(f"kernel has {kernel.ndim} axes; expected {2 * N} or {2 * N + 2}")
    return PhaseSpaceField(grid, dft_sum(G, grid, yax))


def wp_blocks(phi: Window, f: SpinorField, budget: int = 1 << 22) -> Iterator[tuple[slice, np.ndarray]]:
    """Yield ``(rows, W_phi f[:, rows])`` over blocks of the first spatial axis."""
    if phi.grid != f.grid:
        raise ValueError("window and field live on different grids")
    grid, N = f.grid, f.grid.N
    yax = tuple(range(1 + N, 1 + 2 * N))
    fy = f.data.reshape((f.m,) + (1,) * N + grid.shape)
    conj_phi = np.conj(phi.samples)
    B = _block_rows(grid, f.m, budget)
    for start in range(0, grid.n, B):
        rows = np.arange(start, min(grid.n, start + B))
        G = pair_values(conj_phi, N, rows)[None] * fy
        yield slice(rows[0], rows[-1] + 1), dft_sum(G, grid, yax)


def wp_transform(phi: Window, f: SpinorField) -> PhaseSpaceField:
    """Wave packet transform ``W_phi f`` on the full phase-space grid."""
    if f.space != "x":
        raise ValueError("wp_transform expects a field sampled at spatial nodes")
    out = np.empty((f.m,) + f.grid.shape * 2, dtype=complex)
    for rows, block in wp_blocks(phi, f):
        out[:, rows] = block
    return PhaseSpaceField(f.grid, out)


def wp_adjoint(psi: Window, F: PhaseSpaceField) -> SpinorField:
    """Synthesis ``int int F(y, xi) psi(y - x) exp(i x.xi) dy dxi / (2 pi)^N``.

    This is the ``L^2`` adjoint of :func:`wp_transform` with window ``psi``.
    """
    if psi.grid != F.grid:
        raise ValueError("window and phase-space field live on different grids")
    grid, N = F.grid, F.grid.N
    xiax = tuple(range(1 + N, 1 + 2 * N))
    yax = tuple(range(1, 1 + N))
    out = np.zeros((F.m,) + grid.shape, dtype=complex)
    B = _block_rows(grid, F.m)
    for start in range(0, grid.n, B):
        rows = np.arange(start, min(grid.n, start + B))
        H = idft_sum(F.data[:, rows], grid, xiax) * (2 * np.pi) ** (-N)
        A = pair_values(psi.samples, N, rows)
        out += np.sum(A[None] * H, axis=yax)
    return SpinorField(grid, out * grid.dx**N)


def wp_invert(phi: Window, psi: Window, F: PhaseSpaceField) -> SpinorField:
    """Recover ``f`` from ``F = W_phi f`` as ``<psi, phi>^{-1} W_psi^* F``."""
    c = psi.inner(phi)
    if abs(c) <= 1e-8 * psi.norm * phi.norm:
        raise IllConditionedInversion(
            f"|<psi, phi>| = {abs(c):.3e} is too small relative to |psi||phi| = {psi.norm * phi.norm:.3e}"
        )
    return wp_adjoint(psi, F) / c


def wp_transform_matrix_window(kernel: np.ndarray, f: SpinorField, xi_dependent: bool = False) -> PhaseSpaceField:
    """Transform with a matrix window: ``int K(x - y, xi) exp(-i xi.y) f(y) dy``.

    Parameters
    ----------
    kernel : ndarray
        Samples of ``K`` on the spatial grid, shape ``(m, m, z...)``; with
        ``xi_dependent`` the shape is ``(m, m, z..., xi...)``.
    f : SpinorField
    xi_dependent : bool
        Whether ``K`` varies with ``xi``.  The ``xi``-independent case costs
        one DFT per ``x``; the general case is a direct sum per ``xi`` node.
    """
    grid, N = f.grid, f.grid.N
    if kernel.shape[:2] != (f.m, f.m):
        raise ValueError(f"kernel acts on C^{kernel.shape[0]} but field has {f.m} components")
    if not xi_dependent:
        if kernel.shape[2:] != grid.shape:
            raise ValueError(f"kernel shape {kernel.shape} does not match grid")
        return pair_transform(pair_values(kernel, N), f)
    if kernel.shape[2:] != grid.shape * 2:
        raise ValueError(f"xi-dependent kernel shape {kernel.shape} does not match grid")
    y = grid.mesh()
    xi = grid.freq_mesh().reshape(N, -1)
    out = np.empty((f.m,) + grid.shape + (xi.shape[1],), dtype=complex)
    kflat = kernel.reshape(kernel.shape[: 2 + N] + (-1,))
    for k in range(xi.shape[1]):
        Kp = pair_values(kflat[..., k], N)
        G = np.einsum("ij...,j...->i...", Kp, np.broadcast_to(
            f.data.reshape((f.m,) + (1,) * N + grid.shape), (f.m,) + Kp.shape[2:]))
        phase = np.exp(-1j * np.tensordot(xi[:, k], y, axes=1))
        out[..., k] = np.sum(G * phase, axis=tuple(range(1 + N, 1 + 2 * N))) * grid.dx**N
    return PhaseSpaceField(grid, out.reshape((f.m,) + grid.shape * 2))
