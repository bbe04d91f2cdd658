"""Clifford systems, the free Dirac symbol, energy projections and free flows.

The free Dirac operator ``-i alpha.grad + mass beta`` is diagonalized by the
Fourier transform: its symbol ``h0(xi) = alpha.xi + mass beta`` squares to
``(|xi|^2 + mass^2) I``, so the positive and negative energy projections are
``P+-(xi) = (I +- h0(xi) / E(xi)) / 2`` with ``E = sqrt(|xi|^2 + mass^2)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import SpinorField
from .spectral import MultiplierSymbol, forward_ft, inverse_ft

__all__ = [
    "PAULI",
    "CliffordSystem",
    "preset",
    "PRESETS",
    "MasslessNodeWarning",
    "dirac_symbol",
    "dirac_multiplier",
    "as_symbol",
    "free_propagator_symbol",
    "projections",
    "free_dirac_propagate",
    "klein_gordon_propagate",
    "project_field",
]

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class MasslessNodeWarning(UserWarning):
    """The zero frequency node of a massless system used the ``P+- = I/2`` convention."""


@dataclass(frozen=True, eq=False)
class CliffordSystem:
    """Hermitian matrices ``alpha_1..alpha_N`` and ``beta`` with a mass.

    ``alphas`` has shape ``(N, m, m)``; ``beta`` has shape ``(m, m)``.
    """

    alphas: np.ndarray
    beta: np.ndarray
    mass: float = 1.0
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=complex)
        b = np.asarray(self.beta, dtype=complex)
        if a.ndim != 3 or a.shape[1] != a.shape[2] or b.shape != a.shape[1:]:
            raise ValueError(f"inconsistent Clifford shapes {a.shape} and {b.shape}")
        if self.mass < 0:
            raise ValueError(f"mass must be nonnegative, got {self.mass}")
        for M in list(a) + [b]:
            if not np.allclose(M, M.conj().T, atol=0, rtol=0):
                raise ValueError("Clifford matrices must be Hermitian")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "beta", b)

    @property
    def N(self) -> int:
        return self.alphas.shape[0]

    @property
    def m(self) -> int:
        return self.beta.shape[0]

    def with_mass(self, mass: float) -> "CliffordSystem":
        return CliffordSystem(self.alphas, self.beta, mass, self.name)

    def clifford_residual(self) -> float:
        """Largest entry of the anticommutation defects; zero for the presets."""
        I = np.eye(self.m)
        mats = list(self.alphas)
        res = 0.0
        for j, A in enumerate(mats):
            for k, B in enumerate(mats):
                res = max(res, np.max(np.abs(A @ B + B @ A - 2 * (j == k) * I)))
            res = max(res, np.max(np.abs(A @ self.beta + self.beta @ A)))
        res = max(res, np.max(np.abs(self.beta @ self.beta - I)))
        return float(res)


def _dirac3d(mass):
    Z, I2 = np.zeros((2, 2)), np.eye(2)
    alphas = np.array([np.block([[Z, s], [s, Z]]) for s in PAULI])
    beta = np.block([[I2, Z], [Z, -I2]])
    return CliffordSystem(alphas, beta, mass, "dirac3d")


PRESETS = {
    "dirac1d": lambda mass: CliffordSystem(np.array([PAULI[0]]), PAULI[2], mass, "dirac1d"),
    "dirac2d": lambda mass: CliffordSystem(np.array(PAULI[:2]), PAULI[2], mass, "dirac2d"),
    "dirac3d": _dirac3d,
}


def preset(name: str, mass: float = 1.0) -> CliffordSystem:
    """Standard Clifford system: ``"dirac1d"``, ``"dirac2d"`` or ``"dirac3d"``."""
    try:
        return PRESETS[name](mass)
    except KeyError:
        raise ValueError(f"unknown Clifford preset {name!r}; choose from {sorted(PRESETS)}") from None


def dirac_symbol(cs: CliffordSystem, xi) -> np.ndarray:
    """``alpha.xi + mass beta`` for ``xi`` of shape ``(N, *S)``; returns ``(m, m, *S)``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[0] != cs.N:
        raise ValueError(f"frequency has {xi.shape[0]} components, system has N={cs.N}")
    h = np.tensordot(cs.alphas, xi, axes=([0], [0]))
    return h + cs.mass * cs.beta.reshape(cs.beta.shape + (1,) * (xi.ndim - 1))


def dirac_multiplier(cs: CliffordSystem) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: dirac_symbol(cs, xi), m=cs.m, hermitian=True)


def as_symbol(obj) -> MultiplierSymbol:
    """Accept a :class:`CliffordSystem` or a matrix :class:`MultiplierSymbol`."""
    if isinstance(obj, CliffordSystem):
        return dirac_multiplier(obj)
    if isinstance(obj, MultiplierSymbol) and not obj.is_scalar:
        return obj
    raise TypeError(f"expected a CliffordSystem or matrix MultiplierSymbol, got {obj!r}")


def _energy(cs, xi):
    return np.sqrt(np.sum(np.asarray(xi, dtype=float) ** 2, axis=0) + cs.mass**2)


def projections(cs: CliffordSystem, xi, singular: str = "raise") -> tuple[np.ndarray, np.ndarray]:
    """Energy projections ``(P+(xi), P-(xi))``, each of shape ``(m, m, *S)``.

    ``singular="raise"`` rejects the massless zero frequency;
    ``singular="convention"`` sets both projections to ``I/2`` there and
    emits :class:`MasslessNodeWarning`.
    """
    xi = np.asarray(xi, dtype=float)
    E = _energy(cs, xi)
    zero = E == 0
    if np.any(zero):
        if singular == "raise":
            raise ZeroDivisionError("projections are undefined at xi = 0 for a massless system")
        warnings.warn("massless system: P+- set to I/2 at xi = 0", MasslessNodeWarning, stacklevel=2)
    Einv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, E))
    h = dirac_symbol(cs, xi) * Einv
    I = np.eye(cs.m).reshape((cs.m, cs.m) + (1,) * (xi.ndim - 1))
    return 0.5 * (I + h), 0.5 * (I - h)


def _check(cs, psi):
    if psi.grid.N != cs.N or psi.m != cs.m:
        raise ValueError(
            f"field (N={psi.grid.N}, m={psi.m}) does not match Clifford system (N={cs.N}, m={cs.m})"
        )


def _apply_matrix_symbol(M, psi):
    F = forward_ft(psi)
    return inverse_ft(F.with_data(np.einsum("ij...,j...->i...", M, F.data)))


def free_propagator_symbol(cs: CliffordSystem, grid, t: float) -> np.ndarray:
    """``exp(-i t E) P+ + exp(i t E) P-`` at every frequency node."""
    xi = grid.freq_mesh()
    E = _energy(cs, xi)
    Pp, Pm = projections(cs, xi, singular="convention")
    return np.exp(-1j * t * E) * Pp + np.exp(1j * t * E) * Pm


def free_dirac_propagate(cs: CliffordSystem, psi0: SpinorField, t: float) -> SpinorField:
    """Solve ``i d_t psi = (-i alpha.grad + mass beta) psi`` for time ``t``."""
    _check(cs, psi0)
    if t == 0:
        return psi0
    return _apply_matrix_symbol(free_propagator_symbol(cs, psi0.grid, t), psi0)


def klein_gordon_propagate(psi0: SpinorField, t: float, sign: int = 1, mass: float = 1.0) -> SpinorField:
    """Solve ``i d_t psi = sign * sqrt(mass^2 - Laplacian) psi`` componentwise."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if t == 0:
        return psi0
    E = np.sqrt(np.sum(psi0.grid.freq_mesh() ** 2, axis=0) + mass**2)
    F = forward_ft(psi0)
    return inverse_ft(F.with_data(F.data * np.exp(-1j * sign * t * E)))


def project_field(cs: CliffordSystem, psi: SpinorField, sign: int = 1) -> SpinorField:
    """Apply the positive (``sign=+1``) or negative energy projection."""
    _check(cs, psi)
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    Pp, Pm = projections(cs, psi.grid.freq_mesh(), singular="convention")
    return _apply_matrix_symbol(Pp if sign == 1 else Pm, psi)
