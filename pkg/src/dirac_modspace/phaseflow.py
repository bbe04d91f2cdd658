"""Phase-space form of ``i u_t = a(D) u + V u`` and its Picard solver.

Writing ``W = W_phi u``, the equation becomes a transport equation in
``(x, xi)`` with a matrix phase and remainder terms:

* ``R0``   the symbol remainder, ``W_phi(a(D) u) - a(xi) W_phi u``;
* ``R``    the second-order Taylor remainder of a quadratic ``Q``;
* ``R1``   the first-order Taylor remainder of a sub-quadratic ``V1``;
* ``Rt``   the bounded part, ``W_phi(V2 u)``.

For a quadratic potential the transport runs along
``xi -> g(s; t, x, xi)``; for a sub-quadratic one there is no transport and
``V1(s, x)`` joins the phase instead.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dirac import CliffordSystem, as_symbol, dirac_multiplier
from .grid import Grid, SpinorField
from .potentials import Potential, taylor_Q, taylor_V, xi_shift
from .refprop import expm_batched
from .spectral import MultiplierSymbol, dft_sum, idft_sum
from .wavepacket import (
    PhaseSpaceField,
    Window,
    pair_transform,
    pair_values,
    wp_invert,
    wp_transform,
    wp_transform_matrix_window,
)

__all__ = [
    "SymbolRemainder",
    "SKernel",
    "build_s_kernel",
    "remainder_R",
    "remainder_R1",
    "remainder_Rtilde",
    "remainder_R0",
    "decomposition_residual",
    "xi_pullback",
    "PicardConvergenceWarning",
    "PicardResult",
    "picard_propagate",
]


def _multi_indices(N: int, max_order: int):
    return [b for b in itertools.product(range(max_order + 1), repeat=N) if sum(b) <= max_order]


# ------------------------------------------------------------ symbol remainder


@dataclass(frozen=True, eq=False)
class SymbolRemainder:
    """``b(eta; xi) = a(xi - eta) - a(xi)`` for a matrix or scalar symbol."""

    symbol: object

    def _sym(self):
        if isinstance(self.symbol, CliffordSystem):
            return as_symbol(self.symbol)
        return self.symbol

    @property
    def xi_independent(self) -> bool:
        # true for the Dirac symbol, where b = -alpha.eta
        return isinstance(self.symbol, CliffordSystem)

    def __call__(self, eta, xi) -> np.ndarray:
        sym = self._sym()
        eta, xi = np.broadcast_arrays(np.asarray(eta, dtype=float), np.asarray(xi, dtype=float))
        return np.asarray(sym(xi - eta)) - np.asarray(sym(xi))

    def bound_table(self, N: int, k: float, radii: Sequence[float] = (4, 8, 16, 32),
                    max_order: int = 2, points: int = 17, h: float = 1e-3) -> dict:
        """Sup of ``|d_eta^alpha b(eta; xi)| / <eta>^k`` over nested boxes.

        For each radius ``R`` the sup is taken over ``eta`` and ``xi`` on a
        lattice in ``[-R, R]^N``.  Derivatives are central differences with
        step ``h``.  Returns ``{radius: {alpha: sup}}``.
        """
        table = {}
        for R in radii:
            axis = np.linspace(-R, R, points)
            lat = np.stack(np.meshgrid(*([axis] * N), indexing="ij")).reshape(N, -1)
            eta = np.repeat(lat, lat.shape[1], axis=1)
            xi = np.tile(lat, (1, lat.shape[1]))
            weight = (1.0 + np.sum(eta**2, axis=0)) ** (k / 2.0)
            row = {}
            for alpha in _multi_indices(N, max_order):
                d = self._derivative(eta, xi, alpha, h)
                mag = np.abs(d).reshape(-1, d.shape[-1]).max(axis=0) if d.ndim > 1 else np.abs(d)
                row[alpha] = float(np.max(mag / weight))
            table[float(R)] = row
        return table

    def satisfies_bound(self, N: int, k: float, growth: float = 1.5, **kw) -> tuple[bool, dict]:
        """Whether the box sups stay within a factor ``growth`` as the box grows."""
        table = self.bound_table(N, k, **kw)
        radii = sorted(table)
        ok = True
        for alpha in table[radii[0]]:
            lo, hi = table[radii[0]][alpha], table[radii[-1]][alpha]
            if hi > growth * max(lo, 1e-6):
                ok = False
        return ok, table

    def _derivative(self, eta, xi, alpha, h):
        # tensor-product central differences of order alpha_j in eta_j
        stencils = {0: ((0, 1.0),), 1: ((1, 0.5 / h), (-1, -0.5 / h)),
                    2: ((1, 1 / h**2), (0, -2 / h**2), (-1, 1 / h**2))}
        out = 0.0
        for combo in itertools.product(*(stencils[a] for a in alpha)):
            shift = np.array([c[0] for c in combo], dtype=float).reshape(-1, 1) * h
            coef = np.prod([c[1] for c in combo])
            out = out + coef * self(eta + shift, xi)
        return np.asarray(out)


# ------------------------------------------------------------------ S kernel


@dataclass(frozen=True, eq=False)
class SKernel:
    """Samples of ``S(z, xi) = F^{-1}_{eta -> z}[(a(xi + eta) - a(xi)) F(conj phi)(eta)]``.

    ``samples`` has shape ``(m, m, z...)`` when ``xi_dependent`` is false and
    ``(m, m, z..., xi...)`` otherwise.  ``spectrum`` holds the same data
    before the inverse transform in ``eta``, for spectral derivatives.
    """

    grid: Grid
    samples: np.ndarray
    spectrum: np.ndarray
    xi_dependent: bool
    decay_order: int
    _derivs: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    def derivative(self, beta: tuple[int, ...]) -> np.ndarray:
        """``d_z^beta S`` by spectral differentiation."""
        beta = tuple(beta)
        if beta not in self._derivs:
            g, N = self.grid, self.grid.N
            eta = g.freq_mesh()
            sym = np.ones(g.shape, dtype=complex)
            for j, b in enumerate(beta):
                sym = sym * (1j * eta[j]) ** b
            if self.xi_dependent:
                sym = sym.reshape(g.shape + (1,) * N)
            spec = self.spectrum * sym
            self._derivs[beta] = idft_sum(spec, g, tuple(range(2, 2 + N))) * (2 * np.pi) ** (-N / 2)
        return self._derivs[beta]

    def decay_table(self, max_order: int = 2) -> dict:
        """``max_{z, xi} <z>^{2n} |d^beta S(z, xi)|`` for every ``|beta| <= max_order``."""
        g, N = self.grid, self.grid.N
        w = (1.0 + np.sum(g.mesh() ** 2, axis=0)) ** self.decay_order
        if self.xi_dependent:
            w = w.reshape(g.shape + (1,) * N)
        out = {}
        for beta in _multi_indices(N, max_order):
            d = np.abs(self.derivative(beta)).max(axis=(0, 1))
            out[beta] = float(np.max(w * d))
        return out


def build_s_kernel(symbol, phi: Window, decay_order: int = 1) -> SKernel:
    """Spectrally compute the symbol-remainder kernel for window ``phi``.

    ``decay_order`` is the ``n`` in the ``<z>^{-2n}`` decay bound and must
    satisfy ``2n > N``.  For a :class:`CliffordSystem` the kernel does not
    depend on ``xi`` and equals ``-i alpha.grad conj(phi)``.
    """
    g, N = phi.grid, phi.grid.N
    if not 2 * decay_order > N:
        raise ValueError(f"decay order n = {decay_order} must satisfy 2n > N = {N}")
    rem = SymbolRemainder(symbol)
    eta = g.freq_mesh()
    Fphib = dft_sum(np.conj(phi.samples), g, tuple(range(N))) * (2 * np.pi) ** (-N / 2)
    if rem.xi_independent:
        b = rem(-eta, np.zeros_like(eta))
        b = _as_matrix(b, g)
        spec = b * Fphib
        axes = tuple(range(2, 2 + N))
        S = idft_sum(spec, g, axes) * (2 * np.pi) ** (-N / 2)
        return SKernel(g, S, spec, False, decay_order)
    xi = g.freq_mesh()
    E = eta.reshape((N,) + g.shape + (1,) * N)
    X = xi.reshape((N,) + (1,) * N + g.shape)
    E, X = np.broadcast_arrays(E, X)
    b = _as_matrix(rem(-E, X), g, extra=N)
    spec = b * Fphib.reshape(g.shape + (1,) * N)
    S = idft_sum(spec, g, tuple(range(2, 2 + N))) * (2 * np.pi) ** (-N / 2)
    return SKernel(g, S, spec, True, decay_order)


def _as_matrix(b, g, extra=0):
    # scalar symbols act as multiples of the identity on one component
    if b.ndim == g.N + extra:
        return b[None, None]
    return b


# ---------------------------------------------------------------- remainders


def _offsets(grid: Grid):
    # x coordinates on (x..., 1...) and minimum-image d = y - x on (x..., y...)
    N = grid.N
    mesh = grid.mesh()
    d = -np.stack([pair_values(mesh[j], N) for j in range(N)])
    x = mesh.reshape((N,) + grid.shape + (1,) * N)
    return x, d


def remainder_R(pot: Potential, phi: Window, u: SpinorField, t: float) -> PhaseSpaceField:
    """``sum_y e^{-i y.xi} conj(phi(x - y)) sum_jk d_j d_k Q_jk(t, x + d, x) u(y) dy``, ``d = y - x``."""
    if pot.quadratic is None or pot.quadratic.bound == 0.0:
        return PhaseSpaceField(u.grid, np.zeros((u.m,) + u.grid.shape * 2, dtype=complex))
    return pair_transform(_r_kernel(pot, phi, t), u)


def _r_kernel(pot, phi, t):
    g, N = phi.grid, phi.grid.N
    x, d = _offsets(g)
    Qjk = taylor_Q(pot, t, x + d, x)
    quad = np.einsum("j...,jk...,k...->...", d, Qjk, d)
    return pair_values(np.conj(phi.samples), N) * quad


def remainder_R1(pot: Potential, phi: Window, u: SpinorField, t: float) -> PhaseSpaceField:
    """``sum_k sum_y e^{-i y.xi} d_k conj(phi(x - y)) V_k(t, x + d, x) u(y) dy``, ``d = y - x``."""
    if pot.hermitian is None:
        return PhaseSpaceField(u.grid, np.zeros((u.m,) + u.grid.shape * 2, dtype=complex))
    return pair_transform(_r1_kernel(pot, phi, t), u)


def _r1_kernel(pot, phi, t):
    g, N = phi.grid, phi.grid.N
    x, d = _offsets(g)
    Vk = taylor_V(pot, t, x + d, x)
    K = np.einsum("k...,kij...->ij...", d, Vk)
    return K * pair_values(np.conj(phi.samples), N)


def remainder_Rtilde(pot: Potential, phi: Window, u: SpinorField, t: float) -> PhaseSpaceField:
    """``W_phi(V2(t, .) u)``."""
    if pot.bounded is None:
        return PhaseSpaceField(u.grid, np.zeros((u.m,) + u.grid.shape * 2, dtype=complex))
    V2 = pot.bounded.value(t, u.grid.mesh())
    return wp_transform(phi, u.with_data(np.einsum("ij...,j...->i...", V2, u.data)))


def remainder_R0(kernel: SKernel, u: SpinorField) -> PhaseSpaceField:
    """``sum_y S(x - y, xi) e^{-i xi.y} u(y) dy``."""
    S = kernel.samples
    if S.shape[0] == 1 and u.m > 1:
        S = np.eye(u.m).reshape((u.m, u.m) + (1,) * (S.ndim - 2)) * S[0, 0]
    return wp_transform_matrix_window(S, u, xi_dependent=kernel.xi_dependent)


def decomposition_residual(symbol, phi: Window, u: SpinorField, decay_order: int = 1) -> float:
    """Relative sup residual of ``W(a(D) u) - [a(xi) W u + R0 u]``.

    Zero up to round-off whenever ``u`` is band-limited and the window
    spectrum is negligible beyond ``pi / dx`` minus the band cutoff.
    """
    from .spectral import apply_multiplier

    sym = dirac_multiplier(symbol) if isinstance(symbol, CliffordSystem) else symbol
    g = u.grid
    lhs = wp_transform(phi, apply_multiplier(sym, u)).data
    W = wp_transform(phi, u).data
    A = sym(g.freq_mesh())
    if sym.is_scalar:
        aW = A.reshape((1,) * (1 + g.N) + g.shape) * W
    else:
        aW = np.einsum("ij...,j...->i...", A.reshape((u.m, u.m) + (1,) * g.N + g.shape), W)
    r0 = remainder_R0(build_s_kernel(symbol, phi, decay_order), u).data
    return float(np.abs(lhs - aW - r0).max() / np.abs(lhs).max())


# ----------------------------------------------------------------- transport


def xi_pullback(F: np.ndarray, grid: Grid, shift: np.ndarray) -> np.ndarray:
    """Evaluate ``F(x, xi + shift(x))`` by trigonometric interpolation in ``xi``.

    ``F`` has shape ``(m, x..., xi...)`` and ``shift`` shape ``(N, x...)``.
    Exact for fields of the form ``sum_y G(x, y) e^{-i y.xi}``, which covers
    every wave packet transform on the grid.
    """
    N = grid.N
    if not np.any(shift):
        return F
    xiax = tuple(range(1 + N, 1 + 2 * N))
    G = idft_sum(F, grid, xiax) * (2 * np.pi) ** (-N)
    y = grid.mesh()
    phase = np.exp(-1j * np.einsum("j...,j...->...",
                                   shift.reshape((N,) + grid.shape + (1,) * N),
                                   y.reshape((N,) + (1,) * N + grid.shape)))
    return dft_sum(G * phase, grid, xiax)


class PicardConvergenceWarning(RuntimeWarning):
    """Successive Picard iterates stopped contracting."""


@dataclass(frozen=True, eq=False)
class PicardResult:
    """Snapshots of ``W(t)`` after the final iteration plus diagnostics.

    ``history`` rows are ``(iteration, sup difference, L2 difference)``
    between successive iterates, maximized over snapshots.  ``final_iterates``
    holds ``W^k(T)`` for every ``k``.
    """

    times: np.ndarray
    fields: tuple
    history: tuple
    converged: bool
    final_iterates: tuple
    phi: Window
    path: str

    @property
    def final(self) -> PhaseSpaceField:
        return self.fields[-1]

    def spinor(self, i: int = -1) -> SpinorField:
        return wp_invert(self.phi, self.phi, self.fields[i])

    def iterate_spinors(self) -> list[SpinorField]:
        return [wp_invert(self.phi, self.phi, F) for F in self.final_iterates]

    def history_csv(self) -> str:
        lines = ["iteration,sup_difference,l2_difference"]
        lines += [f"{k},{a:.17g},{b:.17g}" for k, a, b in self.history]
        return "\n".join(lines) + "\n"


def _step_exp(symbol, H_or_g, ds, extra):
    # exp(-i ds (a(g) + extra I)) for the Dirac symbol in closed form
    cs = symbol
    g = H_or_g
    E = np.sqrt(np.sum(g**2, axis=0) + cs.mass**2)
    h0 = np.tensordot(cs.alphas, g, axes=([0], [0])) + cs.mass * cs.beta.reshape(cs.beta.shape + (1,) * (g.ndim - 1))
    safe = np.where(E == 0, 1.0, E)
    sinc = np.where(E == 0, ds, np.sin(E * ds) / safe)
    I = np.eye(cs.m).reshape((cs.m, cs.m) + (1,) * (g.ndim - 1))
    out = np.cos(E * ds) * I - 1j * sinc * h0
    if extra is not None:
        out = out * np.exp(-1j * ds * extra)
    return out


def _matmul(A, B):
    return np.einsum("ij...,jk...->ik...", A, B)


def _apply(A, F):
    return np.einsum("ij...,j...->i...", A, F)


class _Phase:
    """Time-ordered propagators ``U(t, tau)`` of ``d_s U = -i h(s) U`` per phase-space point."""

    def __init__(self, symbol, pot: Potential, grid: Grid, path: str, substeps: int, shift_substeps: int):
        self.symbol, self.pot, self.grid, self.path = symbol, pot, grid, path
        self.substeps, self.shift_substeps = substeps, shift_substeps
        N = grid.N
        self.x = np.broadcast_to(grid.mesh().reshape((N,) + grid.shape + (1,) * N), (N,) + grid.shape * 2)
        self.xi = np.broadcast_to(grid.freq_mesh().reshape((N,) + (1,) * N + grid.shape), (N,) + grid.shape * 2)
        self.xs = grid.mesh()
        self.sym = as_symbol(symbol) if not isinstance(symbol, MultiplierSymbol) else symbol
        self.dirac = isinstance(symbol, CliffordSystem)
        self._static = None

    @property
    def target_independent(self) -> bool:
        # the phase matrix does not depend on the characteristic's end time
        return self.path == "subquadratic" or self.pot.quadratic is None

    def shift(self, s: float, t: float) -> np.ndarray:
        # g(s; t, x, xi) - xi on the spatial grid, zero off the quadratic path
        if self.path != "quadratic":
            return np.zeros_like(self.xs)
        return xi_shift(self.pot, s, t, self.xs, self.shift_substeps)

    def _extra(self, s):
        # scalar part of h at time s: Q - x.grad Q, on the (x, xi) grid
        q = self.pot.quadratic
        if self.path != "quadratic" or q is None:
            return None
        c = q.value(s, self.xs) - np.sum(self.xs * q.gradient(s, self.xs), axis=0)
        return c.reshape(self.grid.shape + (1,) * self.grid.N)

    def _hamiltonian(self, s, t):
        N = self.grid.N
        if self.path == "quadratic":
            c = self.shift(s, t).reshape((N,) + self.grid.shape + (1,) * N)
            H = np.array(self.sym(self.xi + c), dtype=complex)
            extra = self._extra(s)
            if extra is not None:
                H = H + np.eye(H.shape[0]).reshape(H.shape[:2] + (1,) * (2 * N)) * extra
            return H
        H = np.array(self.sym(self.xi), dtype=complex)
        if self.pot.hermitian is not None:
            V1 = self.pot.hermitian.value(s, self.xs)
            H = H + V1.reshape(V1.shape + (1,) * N)
        return H

    def step(self, s0: float, s1: float, t: float) -> np.ndarray:
        """Propagator from ``s0`` to ``s1`` for the characteristic ending at ``t``."""
        ds = s1 - s0
        if self.target_independent and not self.pot.time_dependent:
            if self._static is None:
                H = self._hamiltonian(0.0, t)
                self._static = _eig(H)
            return _from_eig(self._static, ds)
        K = self.substeps
        U = None
        for k in range(K):
            a = s0 + k * ds / K
            mid = a + 0.5 * ds / K
            if self.dirac and self.path == "quadratic":
                N = self.grid.N
                c = self.shift(mid, t).reshape((N,) + self.grid.shape + (1,) * N)
                E = _step_exp(self.symbol, self.xi + c, ds / K, self._extra(mid))
            else:
                E = expm_batched(ds / K * self._hamiltonian(mid, t), self.sym.hermitian)
            U = E if U is None else _matmul(E, U)
        return U


def _eig(H):
    m = H.shape[0]
    S = H.shape[2:]
    mats = np.moveaxis(H.reshape(m, m, -1), -1, 0)
    w, V = np.linalg.eigh(mats)
    return w, V, S


def _from_eig(eig, ds):
    w, V, S = eig
    m = V.shape[1]
    U = np.einsum("pij,pj,pkj->pik", V, np.exp(-1j * ds * w), np.conj(V))
    return np.moveaxis(U, 0, -1).reshape((m, m) + S)


def _weights(j: int, h: float, rule: str) -> np.ndarray:
    # quadrature weights on nodes 0..j with spacing h
    if j == 0:
        return np.zeros(1)
    if rule == "trapezoid" or j == 1:
        w = np.full(j + 1, h)
        w[[0, -1]] = 0.5 * h
        return w
    w = np.zeros(j + 1)
    even = j if j % 2 == 0 else j - 3
    if even:
        w[: even + 1:2] += 2 * h / 3
        w[1:even:2] += 4 * h / 3
        w[[0, even]] -= h / 3
    if j % 2:
        w[even:] += 3 * h / 8 * np.array([1, 3, 3, 1])
    return w


def _choose_path(pot: Potential, path: str) -> str:
    if path == "auto":
        return "subquadratic" if pot.hermitian is not None else "quadratic"
    if path == "quadratic" and pot.hermitian is not None:
        raise ValueError("the quadratic path does not accept a sub-quadratic V1 part")
    if path == "subquadratic" and pot.quadratic is not None:
        raise ValueError("the sub-quadratic path does not accept a quadratic part; see quadratic_as_hermitian")
    if path not in ("quadratic", "subquadratic"):
        raise ValueError(f"unknown path {path!r}")
    return path


def picard_propagate(
    symbol,
    pot: Potential | None,
    phi: Window,
    psi0: SpinorField,
    T: float,
    iterations: int = 3,
    snapshots_per_unit: int = 64,
    substeps: int = 4,
    shift_substeps: int = 64,
    path: str = "auto",
    decay_order: int = 1,
    quadrature: str = "trapezoid",
) -> PicardResult:
    """Propagate ``W_phi u`` in phase space by Picard iteration.

    ``W^0(t) = U(t, 0) W_phi psi0(x, g(0; t, x, xi))`` and

    ``W^{k+1}(t) = W^0(t) - i int_0^t U(t, tau) Rem[W^k(tau)](x, g(tau; t, x, xi)) dtau``

    where ``Rem`` is ``R + Rt + R0`` on the quadratic path and
    ``R1 + Rt + R0`` on the sub-quadratic path, applied to the inverted
    iterate, and ``U`` is the time-ordered exponential of the phase matrix
    built from ``substeps`` midpoint factors per snapshot interval.  The
    time integral is the composite trapezoid rule on the snapshot grid, or
    composite Simpson with ``quadrature="simpson"``.

    A :class:`PicardConvergenceWarning` is issued, and ``converged`` is
    false, when the successive-iterate sup difference fails to decrease
    while still above rounding level.
    """
    pot = pot if pot is not None else Potential()
    path = _choose_path(pot, path)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if T == 0:
        raise ValueError("T must be nonzero")
    if quadrature not in ("trapezoid", "simpson"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    grid = psi0.grid
    M = max(1, int(np.ceil(abs(T) * snapshots_per_unit - 1e-9)))
    times = np.linspace(0.0, T, M + 1)
    dtau = T / M
    phase = _Phase(symbol, pot, grid, path, substeps, shift_substeps)
    kernel = build_s_kernel(symbol, phi, decay_order)

    # U(t_j, tau_i) for i <= j, marching backwards from tau = t_j
    U = {}
    steps = [phase.step(times[i], times[i + 1], None) for i in range(M)] if (
        phase.target_independent) else None
    for j in range(M + 1):
        acc = None
        U[j, j] = None
        for i in range(j - 1, -1, -1):
            E = steps[i] if steps is not None else phase.step(times[i], times[i + 1], times[j])
            acc = E if acc is None else _matmul(acc, E)
            U[j, i] = acc
    shifts = {(j, i): phase.shift(times[i], times[j]) for j in range(M + 1) for i in range(j + 1)}

    def apply_U(j, i, F):
        return F if U[j, i] is None else _apply(U[j, i], F)

    W0data = wp_transform(phi, psi0).data
    W0 = [apply_U(j, 0, xi_pullback(W0data, grid, shifts[j, 0])) for j in range(M + 1)]

    kcache = {}

    def cached_kernel(build, t):
        if pot.time_dependent:
            return build(pot, phi, t)
        if build not in kcache:
            kcache[build] = build(pot, phi, 0.0)
        return kcache[build]

    def remainder(u: SpinorField, t: float) -> np.ndarray:
        out = remainder_R0(kernel, u).data
        if pot.bounded is not None:
            out = out + remainder_Rtilde(pot, phi, u, t).data
        if path == "quadratic" and pot.quadratic is not None and pot.quadratic.bound != 0.0:
            out = out + pair_transform(cached_kernel(_r_kernel, t), u).data
        if path == "subquadratic":
            out = out + pair_transform(cached_kernel(_r1_kernel, t), u).data
        return out

    W = W0
    history = []
    finals = [PhaseSpaceField(grid, W0[-1])]
    converged = True
    for k in range(iterations):
        rem = [remainder(wp_invert(phi, phi, PhaseSpaceField(grid, W[i])), times[i]) for i in range(M + 1)]
        new = []
        for j in range(M + 1):
            acc = np.zeros_like(W0[j])
            for i, w in enumerate(_weights(j, dtau, quadrature)):
                acc += w * apply_U(j, i, xi_pullback(rem[i], grid, shifts[j, i]))
            new.append(W0[j] - 1j * acc)
        wts = (grid.dx * grid.dxi) ** grid.N
        sup = max(float(np.max(np.sqrt(np.sum(np.abs(a - b) ** 2, axis=0)))) for a, b in zip(new, W))
        l2 = max(float(np.sqrt(np.sum(np.abs(a - b) ** 2) * wts)) for a, b in zip(new, W))
        history.append((k + 1, sup, l2))
        W = new
        finals.append(PhaseSpaceField(grid, W[-1]))
        floor = 1e-13 * max(1.0, max(float(np.max(np.abs(w))) for w in W))
        if len(history) >= 2 and history[-1][1] >= history[-2][1] and history[-1][1] > floor:
            converged = False
    if not converged:
        warnings.warn(
            "Picard iterates are not contracting; see the history for successive differences",
            PicardConvergenceWarning, stacklevel=2)
    return PicardResult(times, tuple(PhaseSpaceField(grid, w) for w in W), tuple(history),
                        converged, tuple(finals), phi, path)
