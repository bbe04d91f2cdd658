"""Strang split-step reference solver for ``i u_t = a(D) u + V(t, x) u``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .dirac import CliffordSystem, free_propagator_symbol
from .grid import SpinorField
from .potentials import Potential
from .spectral import MultiplierSymbol

__all__ = ["EvolutionConfig", "Trajectory", "split_step_evolve", "richardson_order", "expm_batched"]


@dataclass(frozen=True)
class EvolutionConfig:
    """Step ``dt > 0`` and final time ``T`` (either sign) with ``|T| / dt`` integral."""

    dt: float
    T: float
    order: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.order != 2:
            raise ValueError("only the second-order Strang splitting is available")
        r = abs(self.T) / self.dt
        if abs(r - round(r)) > 1e-9 * max(1.0, r):
            raise ValueError(f"|T| / dt = {r} is not an integer")

    @property
    def steps(self) -> int:
        return int(round(abs(self.T) / self.dt))

    @property
    def signed_dt(self) -> float:
        return math.copysign(self.dt, self.T) if self.T else self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    fields: tuple

    def __len__(self):
        return len(self.fields)

    @property
    def final(self) -> SpinorField:
        return self.fields[-1]

    def at(self, t: float) -> SpinorField:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t = {t}")
        return self.fields[i]


def expm_batched(A: np.ndarray, hermitian: bool) -> np.ndarray:
    """``exp(-i A)`` for matrices on the first two axes, shape ``(m, m, *S)``."""
    m, S = A.shape[0], A.shape[2:]
    mats = np.moveaxis(A.reshape(m, m, -1), -1, 0)
    if hermitian:
        w, U = np.linalg.eigh(mats)
        E = np.einsum("pij,pj,pkj->pik", U, np.exp(-1j * w), np.conj(U))
    else:
        E = scipy.linalg.expm(-1j * mats)
    return np.moveaxis(E, 0, -1).reshape((m, m) + S)


def _kinetic_factor(symbol, grid, dt, m):
    if isinstance(symbol, CliffordSystem):
        return free_propagator_symbol(symbol, grid, dt)
    if not isinstance(symbol, MultiplierSymbol):
        raise TypeError(f"unsupported symbol {symbol!r}")
    M = symbol.sample(grid)
    if symbol.is_scalar:
        return np.exp(-1j * dt * M)
    return expm_batched(dt * M, symbol.hermitian)


def _apply(E, data):
    if E.ndim == data.ndim - 1:
        return E * data
    return np.einsum("ij...,j...->i...", E, data)


class _PotentialStep:
    # half-step factor exp(-i dt/2 V(t_mid)); scalar when only Q is present,
    # cached when V does not depend on time

    def __init__(self, pot: Potential, grid, m: int, half: float):
        self.pot, self.m, self.half = pot, m, half
        self.x = grid.mesh()
        self.scalar = pot.hermitian is None and pot.bounded is None
        self.cache = None

    def factor(self, t: float):
        if self.cache is not None:
            return self.cache
        if self.scalar:
            E = np.exp(-1j * self.half * self.pot.quadratic.value(t, self.x))
        else:
            V = self.pot.matrix(t, self.x, self.m)
            E = expm_batched(self.half * V, self.pot.is_hermitian)
        if not self.pot.time_dependent:
            self.cache = E
        return E


def split_step_evolve(
    symbol,
    pot: Potential | None,
    psi0: SpinorField,
    cfg: EvolutionConfig,
    times: Sequence[float] | None = None,
) -> Trajectory:
    """Strang splitting ``e^{-i dt V/2} e^{-i dt a(D)} e^{-i dt V/2}``.

    ``V`` is sampled at the midpoint of each step.  ``symbol`` is a
    :class:`CliffordSystem` (projector propagator) or a
    :class:`MultiplierSymbol` (per-node matrix exponential).  Snapshots are
    recorded at ``times``, which must be multiples of ``dt`` between ``0``
    and ``T``; by default only ``T`` is recorded.

    Raises
    ------
    FloatingPointError
        If the state stops being finite.
    """
    pot = pot if pot is not None else Potential()
    grid, m = psi0.grid, psi0.m
    h = cfg.signed_dt
    axes = tuple(range(1, 1 + grid.N))
    K = _kinetic_factor(symbol, grid, h, m)
    K = np.fft.ifftshift(K, axes=tuple(range(K.ndim - grid.N, K.ndim)))
    P = None if pot.is_zero else _PotentialStep(pot, grid, m, 0.5 * h)

    wanted = [cfg.T] if times is None else list(times)
    index = {}
    for t in wanted:
        k = t / h if h else 0.0
        if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)) or not 0 <= round(k) <= cfg.steps:
            raise ValueError(f"snapshot time {t} is not a step multiple inside [0, T]")
        index.setdefault(int(round(k)), []).append(t)

    u = psi0.data.copy()
    snaps = {}
    if 0 in index:
        snaps[0] = u.copy()
    for step in range(1, cfg.steps + 1):
        if P is not None:
            E = P.factor((step - 0.5) * h)
            u = _apply(E, u)
        u = _kinetic(u, K, axes)
        if P is not None:
            u = _apply(E, u)
        if step % 16 == 0 or step == cfg.steps:
            if not np.all(np.isfinite(u)):
                raise FloatingPointError(f"non-finite state after step {step} (t = {step * h:g})")
        if step in index:
            snaps[step] = u.copy()
    order = sorted(index)
    ts = np.array([index[k][0] for k in order], dtype=float)
    return Trajectory(ts, tuple(SpinorField(grid, snaps[k]) for k in order))


def _kinetic(u, K, axes):
    # K is stored in FFT order, so no shift of the symbol is needed here
    U = _apply(K, np.fft.fftn(np.fft.ifftshift(u, axes=axes), axes=axes))
    return np.fft.fftshift(np.fft.ifftn(U, axes=axes), axes=axes)


def richardson_order(symbol, pot: Potential, psi0: SpinorField, T: float, dt: float) -> float:
    """Observed order ``log2(|u_dt - u_dt/2| / |u_dt/2 - u_dt/4|)``."""
    u = [split_step_evolve(symbol, pot, psi0, EvolutionConfig(dt / 2**k, T)).final for k in range(3)]
    e1 = (u[0] - u[1]).norm()
    e2 = (u[1] - u[2]).norm()
    return float(np.log2(e1 / e2))
