"""Weighted mixed Lebesgue norms on phase space and modulation-space norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grid import Grid, SpinorField
from .wavepacket import PhaseSpaceField, Window, wp_blocks

__all__ = ["NormSpec", "mixed_norm", "mod_norm", "mod_norms", "window_equivalence_ratio"]


@dataclass(frozen=True)
class NormSpec:
    """Exponents ``p`` (inner, over ``x``) and ``q`` (outer, over ``xi``) with
    polynomial weights ``<x>^r`` and ``<xi>^s``."""

    p: float = 2.0
    q: float = 2.0
    r: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError(f"exponents must satisfy p, q >= 1, got p={self.p}, q={self.q}")

    @classmethod
    def from_config(cls, cfg: dict) -> "NormSpec":
        def exp(v):
            return np.inf if v in ("inf", "Infinity", None) else float(v)

        return cls(exp(cfg.get("p", 2)), exp(cfg.get("q", 2)), float(cfg.get("r", 0)), float(cfg.get("s", 0)))

    def label(self) -> str:
        def fmt(v):
            return "inf" if np.isinf(v) else f"{v:g}"

        return f"{fmt(self.p)},{fmt(self.q)},{fmt(self.r)},{fmt(self.s)}"


def _bracket(coords: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + np.sum(coords**2, axis=0))


class _MixedAccumulator:
    # inner x-sums are accumulated block by block so that large phase-space
    # fields never have to be held in memory at once

    def __init__(self, grid: Grid, spec: NormSpec):
        self.grid, self.spec = grid, spec
        self.xb = _bracket(grid.mesh())
        self.acc = np.zeros(grid.shape)

    def add(self, rows: slice, mag: np.ndarray):
        # mag: |F| on (x-block..., xi...)
        N, p, r = self.grid.N, self.spec.p, self.spec.r
        w = self.xb[rows].reshape(mag.shape[:N] + (1,) * N)
        xax = tuple(range(N))
        if np.isinf(p):
            self.acc = np.maximum(self.acc, np.max(mag * w**r, axis=xax))
        else:
            self.acc += np.sum(mag**p * w ** (p * r), axis=xax)

    def result(self) -> float:
        g, p, q, s = self.grid, self.spec.p, self.spec.q, self.spec.s
        inner = self.acc if np.isinf(p) else (self.acc * g.dx**g.N) ** (1.0 / p)
        wxi = _bracket(g.freq_mesh())
        if np.isinf(q):
            return float(np.max(inner * wxi**s))
        return float((np.sum(inner**q * wxi ** (q * s)) * g.dxi**g.N) ** (1.0 / q))


def mixed_norm(F: PhaseSpaceField, spec: NormSpec) -> float:
    """``|| || F(x, xi) <x>^r ||_{L^p_x} <xi>^s ||_{L^q_xi}`` with node quadrature."""
    acc = _MixedAccumulator(F.grid, spec)
    acc.add(slice(None), F.magnitude())
    return acc.result()


def mod_norms(f: SpinorField, phi: Window, specs: Sequence[NormSpec]) -> list[float]:
    """Several modulation norms of ``f`` from one pass over ``W_phi f``."""
    accs = [_MixedAccumulator(f.grid, s) for s in specs]
    for rows, block in wp_blocks(phi, f):
        mag = np.sqrt(np.sum(np.abs(block) ** 2, axis=0))
        for a in accs:
            a.add(rows, mag)
    return [a.result() for a in accs]


def mod_norm(f: SpinorField, phi: Window, spec: NormSpec) -> float:
    """Modulation-space norm ``||W_phi f||_{L^{p,q}_{r,s}}``."""
    return mod_norms(f, phi, [spec])[0]


def window_equivalence_ratio(
    fields: Iterable[SpinorField], phi: Window, psi: Window, spec: NormSpec
) -> tuple[float, float]:
    """Extremal ratios ``||f||_psi / ||f||_phi`` over an ensemble of fields."""
    ratios = []
    for f in fields:
        a = mod_norm(f, phi, spec)
        if a == 0:
            raise ValueError("ensemble contains a zero field")
        ratios.append(mod_norm(f, psi, spec) / a)
    if not ratios:
        raise ValueError("ensemble is empty")
    return min(ratios), max(ratios)
