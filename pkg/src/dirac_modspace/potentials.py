"""Matrix potentials split into quadratic, sub-quadratic and bounded parts.

A potential is ``V(t, x) = Q(t, x) I + V1(t, x) + V2(t, x)`` where ``Q`` is a
real scalar with bounded derivatives of order two and higher, ``V1`` is
Hermitian with bounded first and higher derivatives, and ``V2`` is a
bounded matrix that need not be Hermitian.

Evaluators take a time ``t`` and points ``x`` of shape ``(N, *S)``.  Scalar
values come back with shape ``S``, matrices with shape ``(m, m, *S)``,
gradients with an extra leading axis of length ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dirac import CliffordSystem, as_symbol

__all__ = [
    "QuadraticDiagonal",
    "HermitianC1",
    "BoundedMatrix",
    "Potential",
    "eval_Qjk",
    "eval_Vk",
    "taylor_Q",
    "taylor_V",
    "xi_shift",
    "characteristics_g",
    "phase_h",
    "harmonic",
    "inverted_harmonic",
    "linear",
    "cos_profile",
    "oscillating_linear",
    "constant_hermitian",
    "trig_hermitian",
    "electromagnetic",
    "random_bounded",
    "non_hermitian_bounded",
    "potential_from_config",
    "quadratic_as_hermitian",
]

# Gauss-Legendre nodes and weights mapped to [0, 1]
_GL_U, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_THETA = 0.5 * (_GL_U + 1.0)
_GL_WEIGHT = 0.5 * _GL_W


def _expand(mat: np.ndarray, ndim: int) -> np.ndarray:
    return mat.reshape(mat.shape + (1,) * ndim)


@dataclass(frozen=True)
class QuadraticDiagonal:
    """Scalar part ``Q(t, x) I`` with value, gradient and Hessian evaluators.

    ``bound`` is the declared sup of the Hessian entries, checked by
    :meth:`Potential.check`.
    """

    value: Callable
    gradient: Callable
    hessian: Callable
    bound: float = np.inf
    time_dependent: bool = False
    name: str = "quadratic"


@dataclass(frozen=True)
class HermitianC1:
    """Hermitian matrix part ``V1(t, x)`` with value and gradient evaluators."""

    value: Callable
    gradient: Callable
    bound: float = np.inf
    time_dependent: bool = False
    name: str = "hermitian"


@dataclass(frozen=True)
class BoundedMatrix:
    """Bounded matrix part ``V2(t, x)``."""

    value: Callable
    hermitian: bool = True
    bound: float = np.inf
    time_dependent: bool = False
    name: str = "bounded"


@dataclass(frozen=True)
class Potential:
    """Sum of at most one part of each class."""

    quadratic: QuadraticDiagonal | None = None
    hermitian: HermitianC1 | None = None
    bounded: BoundedMatrix | None = None

    @property
    def parts(self):
        return [p for p in (self.quadratic, self.hermitian, self.bounded) if p is not None]

    @property
    def time_dependent(self) -> bool:
        return any(p.time_dependent for p in self.parts)

    @property
    def is_hermitian(self) -> bool:
        return self.bounded is None or self.bounded.hermitian

    @property
    def is_zero(self) -> bool:
        return not self.parts

    @property
    def label(self) -> str:
        return "+".join(p.name for p in self.parts) or "zero"

    def __add__(self, other: "Potential") -> "Potential":
        def pick(a, b, what):
            if a is not None and b is not None:
                raise ValueError(f"both summands carry a {what} part; combine them into one evaluator")
            return a if a is not None else b

        return Potential(
            pick(self.quadratic, other.quadratic, "quadratic"),
            pick(self.hermitian, other.hermitian, "Hermitian"),
            pick(self.bounded, other.bounded, "bounded"),
        )

    def matrix(self, t: float, x: np.ndarray, m: int) -> np.ndarray:
        """Full ``V(t, x)`` of shape ``(m, m, *S)``."""
        x = np.asarray(x, dtype=float)
        S = x.shape[1:]
        V = np.zeros((m, m) + S, dtype=complex)
        if self.quadratic is not None:
            V += _expand(np.eye(m), len(S)) * self.quadratic.value(t, x)
        for part in (self.hermitian, self.bounded):
            if part is not None:
                V += part.value(t, x)
        return V

    def bounded_sup(self, grid, t: float = 0.0, m: int = 2) -> float:
        """Largest spectral norm of ``V2(t, x)`` over the grid nodes."""
        if self.bounded is None:
            return 0.0
        V = self.bounded.value(t, grid.mesh())
        mats = np.moveaxis(V.reshape(V.shape[:2] + (-1,)), -1, 0)
        return float(np.max(np.linalg.norm(mats, ord=2, axis=(1, 2))))

    def check(self, grid, m: int, times: Sequence[float] = (0.0,)) -> None:
        """Sample the class invariants on the grid; raise ``ValueError`` on violation."""
        x = grid.mesh()
        for t in times:
            if self.quadratic is not None:
                H = self.quadratic.hessian(t, x)
                if np.max(np.abs(H)) > self.quadratic.bound * (1 + 1e-12):
                    raise ValueError(f"Hessian of {self.quadratic.name} exceeds its declared bound")
            if self.hermitian is not None:
                V = self.hermitian.value(t, x)
                if np.max(np.abs(V - np.conj(np.swapaxes(V, 0, 1)))) > 1e-12 * max(1.0, np.max(np.abs(V))):
                    raise ValueError(f"{self.hermitian.name} is not Hermitian")
                G = self.hermitian.gradient(t, x)
                if np.max(np.abs(G)) > self.hermitian.bound * (1 + 1e-12):
                    raise ValueError(f"gradient of {self.hermitian.name} exceeds its declared bound")
            if self.bounded is not None:
                V = self.bounded.value(t, x)
                if np.max(np.abs(V)) > self.bounded.bound * (1 + 1e-12):
                    raise ValueError(f"{self.bounded.name} exceeds its declared bound")
                if self.bounded.hermitian and np.max(np.abs(V - np.conj(np.swapaxes(V, 0, 1)))) > 1e-12:
                    raise ValueError(f"{self.bounded.name} is flagged Hermitian but is not")


# ---------------------------------------------------------------- remainders


def _auto_panels(d) -> int:
    # one 8-point panel per segment length 2 keeps the rule near round-off
    # for the smooth library potentials
    span = float(np.max(np.abs(d))) if np.size(d) else 0.0
    return max(1, int(np.ceil(span / 2.0)))


def _theta_rule(panels: int):
    if panels < 1:
        raise ValueError(f"panels must be >= 1, got {panels}")
    h = 1.0 / panels
    for p in range(panels):
        for th, w in zip(_GL_THETA, _GL_WEIGHT):
            yield (p + th) * h, w * h


def _segment(y, x):
    y, x = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(x, dtype=float))
    return x, y - x


def taylor_Q(pot: Potential, t: float, y, x, panels: int | None = None) -> np.ndarray:
    """All ``Q_jk(t, y, x) = int_0^1 d_j d_k Q(t, x + th (y - x)) (1 - th) dth``.

    Returns shape ``(N, N, *S)``.  The ``th`` integral uses 8-point
    Gauss-Legendre on each of ``panels`` equal subintervals; by default one
    panel per unit of length 2 of the longest segment ``y - x``.
    """
    if pot.quadratic is None:
        raise TypeError("potential has no quadratic part")
    x, d = _segment(y, x)
    out = 0.0
    for th, w in _theta_rule(_auto_panels(d) if panels is None else panels):
        out = out + w * (1.0 - th) * pot.quadratic.hessian(t, x + th * d)
    return np.asarray(out)


def eval_Qjk(pot: Potential, t: float, y, x, j: int, k: int, panels: int | None = None) -> np.ndarray:
    """Second-order Taylor remainder coefficient ``Q_jk(t, y, x)``."""
    return taylor_Q(pot, t, y, x, panels)[j, k]


def taylor_V(pot: Potential, t: float, y, x, panels: int | None = None) -> np.ndarray:
    """All ``V_k(t, y, x) = int_0^1 d_k V1(t, x + th (y - x)) dth``; shape ``(N, m, m, *S)``."""
    if pot.hermitian is None:
        raise TypeError("potential has no Hermitian C^1 part")
    x, d = _segment(y, x)
    out = 0.0
    for th, w in _theta_rule(_auto_panels(d) if panels is None else panels):
        out = out + w * pot.hermitian.gradient(t, x + th * d)
    return np.asarray(out)


def eval_Vk(pot: Potential, t: float, y, x, k: int, panels: int | None = None) -> np.ndarray:
    """First-order Taylor remainder matrix ``V_k(t, y, x)``."""
    return taylor_V(pot, t, y, x, panels)[k]


# ---------------------------------------------------------- characteristics


def _simpson_nodes(a: float, b: float, per_unit: int):
    M = max(2, 2 * int(np.ceil(abs(b - a) * per_unit / 2)))
    tau = np.linspace(a, b, M + 1)
    w = np.ones(M + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return tau, w * (b - a) / (3 * M)


def xi_shift(pot: Potential, s: float, t: float, x, substeps: int = 64) -> np.ndarray:
    """``g(s; t, x, xi) - xi = -int_t^s grad Q(tau, x) dtau``, shape ``(N, *S)``.

    Only the quadratic part moves frequencies; without one the shift is zero.
    ``substeps`` is the Simpson resolution per unit time for time-dependent
    potentials.
    """
    x = np.asarray(x, dtype=float)
    q = pot.quadratic
    if q is None or s == t:
        return np.zeros_like(x)
    if not q.time_dependent:
        return -(s - t) * q.gradient(t, x)
    tau, w = _simpson_nodes(t, s, substeps)
    return -sum(wi * q.gradient(ti, x) for ti, wi in zip(tau, w))


def characteristics_g(pot: Potential, s: float, t: float, x, xi, substeps: int = 64) -> np.ndarray:
    """Characteristic frequency ``g(s; t, x, xi)``."""
    return np.asarray(xi, dtype=float) + xi_shift(pot, s, t, x, substeps)


def phase_h(symbol, pot: Potential, s: float, t: float, x, xi, substeps: int = 64) -> np.ndarray:
    """``a(g(s; t, x, xi)) + (Q(s, x) - x.grad Q(s, x)) I`` of shape ``(m, m, *S)``.

    ``symbol`` is a :class:`~dirac_modspace.dirac.CliffordSystem` or a matrix
    multiplier symbol.
    """
    sym = as_symbol(symbol)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    x, xi = np.broadcast_arrays(x, xi)
    h = np.array(sym(characteristics_g(pot, s, t, x, xi, substeps)), dtype=complex)
    if pot.quadratic is not None:
        q = pot.quadratic
        c = q.value(s, x) - np.sum(x * q.gradient(s, x), axis=0)
        h = h + _expand(np.eye(h.shape[0]), x.ndim - 1) * c
    return h


# ----------------------------------------------------------------- library


def harmonic(N: int = 1, omega: float = 1.0) -> Potential:
    """``Q = omega^2 |x|^2 / 2``."""
    w2 = omega**2
    return Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: 0.5 * w2 * np.sum(x**2, axis=0),
        gradient=lambda t, x: w2 * np.asarray(x, dtype=float),
        hessian=lambda t, x: w2 * _expand(np.eye(len(x)), x.ndim - 1) * np.ones(x.shape[1:]),
        bound=w2, name="harmonic"))


def inverted_harmonic(N: int = 1, omega: float = 1.0) -> Potential:
    """``Q = -omega^2 |x|^2 / 2``."""
    w2 = omega**2
    return Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: -0.5 * w2 * np.sum(x**2, axis=0),
        gradient=lambda t, x: -w2 * np.asarray(x, dtype=float),
        hessian=lambda t, x: -w2 * _expand(np.eye(len(x)), x.ndim - 1) * np.ones(x.shape[1:]),
        bound=w2, name="inverted"))


def linear(a: Sequence[float]) -> Potential:
    """``Q = a.x``."""
    a = np.asarray(a, dtype=float).ravel()
    return Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: np.tensordot(a, x, axes=1),
        gradient=lambda t, x: _expand(a, x.ndim - 1) * np.ones(x.shape[1:]),
        hessian=lambda t, x: np.zeros((len(a), len(a)) + x.shape[1:]),
        bound=0.0, name="linear"))


def cos_profile(N: int = 1, amplitude: float = 1.0) -> Potential:
    """``Q = A sum_j cos(x_j)``."""
    A = float(amplitude)

    def hess(t, x):
        H = np.zeros((len(x), len(x)) + x.shape[1:])
        for j in range(len(x)):
            H[j, j] = -A * np.cos(x[j])
        return H

    return Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: A * np.sum(np.cos(x), axis=0),
        gradient=lambda t, x: -A * np.sin(x),
        hessian=hess, bound=abs(A), name="cos"))


def oscillating_linear(N: int = 1) -> Potential:
    """Time-dependent ``Q = cos(t) sum_j x_j``."""
    return Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: np.cos(t) * np.sum(x, axis=0),
        gradient=lambda t, x: np.cos(t) * np.ones_like(np.asarray(x, dtype=float)),
        hessian=lambda t, x: np.zeros((len(x), len(x)) + x.shape[1:]),
        bound=0.0, time_dependent=True, name="oscillating-linear"))


def constant_hermitian(M) -> Potential:
    """Constant Hermitian ``V1 = M``."""
    M = np.asarray(M, dtype=complex)
    if not np.allclose(M, M.conj().T, rtol=0, atol=1e-14):
        raise ValueError("constant V1 must be Hermitian")
    m = M.shape[0]
    return Potential(hermitian=HermitianC1(
        value=lambda t, x: _expand(M, x.ndim - 1) * np.ones(x.shape[1:]),
        gradient=lambda t, x: np.zeros((len(x), m, m) + x.shape[1:], dtype=complex),
        bound=0.0, name="constant"))


def trig_hermitian(cs: CliffordSystem, amplitude: float = 1.0) -> Potential:
    """``V1 = A (sin(sum_j x_j) beta + cos(x_1) alpha_1 / 2)``."""
    A = float(amplitude)
    beta, a1 = cs.beta, cs.alphas[0]

    def value(t, x):
        k = x.ndim - 1
        return A * (_expand(beta, k) * np.sin(np.sum(x, axis=0)) + 0.5 * _expand(a1, k) * np.cos(x[0]))

    def gradient(t, x):
        k = x.ndim - 1
        c = np.cos(np.sum(x, axis=0))
        G = np.empty((len(x),) + beta.shape + x.shape[1:], dtype=complex)
        for j in range(len(x)):
            G[j] = A * _expand(beta, k) * c
        G[0] -= 0.5 * A * _expand(a1, k) * np.sin(x[0])
        return G

    return Potential(hermitian=HermitianC1(value, gradient, bound=1.5 * abs(A), name="trig"))


def _axis_field(x, j, values):
    out = np.zeros(x.shape)
    out[j] = values
    return out


def _diag_jacobian(diag):
    def jac(x):
        d = diag(x)
        J = np.zeros((len(x), len(x)) + x.shape[1:])
        for j in range(len(x)):
            J[j, j] = d[j]
        return J

    return jac


def electromagnetic(
    cs: CliffordSystem,
    q_plus: tuple[Callable, Callable] | None = None,
    q_minus: tuple[Callable, Callable] | None = None,
    vector: tuple[Callable, Callable] | None = None,
) -> Potential:
    """``V1 = Q+ (I + beta)/2 + Q- (I - beta)/2 + sum_j A_j alpha_j``.

    Each coefficient is given as ``(value(x), gradient(x))`` with
    ``vector`` returning ``N`` components and an ``(N, N, *S)`` Jacobian
    ``d_k A_j`` indexed ``[k, j]``.  The defaults grow linearly in ``Q+``
    and oscillate in ``Q-`` and ``A``, so all first derivatives are bounded.
    """
    if q_plus is None:
        q_plus = (lambda x: 0.5 * x[0], lambda x: _axis_field(x, 0, 0.5 * np.ones(x.shape[1:])))
    if q_minus is None:
        q_minus = (lambda x: 0.5 * np.sin(x[0]), lambda x: _axis_field(x, 0, 0.5 * np.cos(x[0])))
    if vector is None:
        vector = (lambda x: 0.4 * np.cos(x), _diag_jacobian(lambda x: -0.4 * np.sin(x)))
    Pp, Pm = 0.5 * (np.eye(cs.m) + cs.beta), 0.5 * (np.eye(cs.m) - cs.beta)
    al = cs.alphas

    def value(t, x):
        k = x.ndim - 1
        V = _expand(Pp, k) * q_plus[0](x) + _expand(Pm, k) * q_minus[0](x)
        return V + np.tensordot(al, vector[0](x), axes=([0], [0])).astype(complex)

    def gradient(t, x):
        k = x.ndim - 1
        gp, gm, J = q_plus[1](x), q_minus[1](x), vector[1](x)
        G = np.empty((len(x), cs.m, cs.m) + x.shape[1:], dtype=complex)
        for d in range(len(x)):
            G[d] = _expand(Pp, k) * gp[d] + _expand(Pm, k) * gm[d] + np.tensordot(al, J[d], axes=([0], [0]))
        return G

    return Potential(hermitian=HermitianC1(value, gradient, name="electromagnetic"))


def random_bounded(m: int, N: int, rng: np.random.Generator, amplitude: float = 1.0,
                   modes: int = 3, hermitian: bool = True) -> Potential:
    """Smooth bounded ``V2 = sum_l C_l cos(k_l.x + phi_l)`` with random matrices."""
    C = rng.standard_normal((modes, m, m)) + 1j * rng.standard_normal((modes, m, m))
    if hermitian:
        C = 0.5 * (C + np.conj(np.swapaxes(C, 1, 2)))
    C *= amplitude / max(1e-300, float(np.sum(np.linalg.norm(C, ord=2, axis=(1, 2)))))
    K = rng.uniform(-1.0, 1.0, (modes, N))
    ph = rng.uniform(0, 2 * np.pi, modes)

    def value(t, x):
        k = x.ndim - 1
        V = 0.0
        for l in range(modes):
            V = V + _expand(C[l], k) * np.cos(np.tensordot(K[l], x, axes=1) + ph[l])
        return np.asarray(V, dtype=complex)

    return Potential(bounded=BoundedMatrix(value, hermitian=hermitian, bound=float(amplitude),
                                           name="random-hermitian" if hermitian else "random"))


def non_hermitian_bounded(m: int, gamma: float = 0.2) -> Potential:
    """``V2 = gamma (i (3/4 + cos(x_1)/4) I + sin(x_1) J / 2)`` with ``J`` the upper shift.

    The anti-Hermitian part ``i gamma (3/4 + cos(x_1)/4)`` drives norm growth
    at a rate between ``gamma / 2`` and ``gamma``.
    """
    g = float(gamma)
    J = np.eye(m, k=1)

    def value(t, x):
        k = x.ndim - 1
        return g * (1j * _expand(np.eye(m), k) * (0.75 + 0.25 * np.cos(x[0]))
                    + 0.5 * _expand(J, k) * np.sin(x[0])).astype(complex)

    return Potential(bounded=BoundedMatrix(value, hermitian=False, bound=abs(g), name="non-hermitian"))


def quadratic_as_hermitian(pot: Potential, m: int) -> Potential:
    """Move a quadratic part with vanishing Hessian into the Hermitian slot as ``Q I``.

    Only valid for potentials that are affine in ``x``, whose gradient is
    bounded as the sub-quadratic class requires.
    """
    q = pot.quadratic
    if q is None:
        return pot
    if pot.hermitian is not None:
        raise ValueError("potential already has a Hermitian part")
    if q.bound != 0.0:
        raise ValueError(f"{q.name} has a nonzero Hessian bound; only affine Q can be treated as V1")
    eye = np.eye(m)

    def value(t, x):
        return _expand(eye, x.ndim - 1) * q.value(t, x)

    def gradient(t, x):
        G = q.gradient(t, x)
        return eye.reshape((1, m, m) + (1,) * (x.ndim - 1)) * G[:, None, None]

    return Potential(hermitian=HermitianC1(value, gradient, time_dependent=q.time_dependent, name=q.name),
                     bounded=pot.bounded)


def _one(cfg: dict, cs: CliffordSystem, rng_seed: int) -> Potential:
    cls = cfg.get("class")
    name = cfg.get("name")
    N, m = cs.N, cs.m
    if cls == "quadratic":
        table = {
            "zero": lambda: Potential(),
            "harmonic": lambda: harmonic(N, float(cfg.get("omega", 1.0))),
            "inverted": lambda: inverted_harmonic(N, float(cfg.get("omega", 1.0))),
            "linear": lambda: linear(cfg.get("a", [1.0] * N)),
            "cos": lambda: cos_profile(N, float(cfg.get("amplitude", 1.0))),
            "oscillating-linear": lambda: oscillating_linear(N),
        }
    elif cls == "hermitian":
        table = {
            "constant": lambda: constant_hermitian(float(cfg.get("amplitude", 0.5)) * cs.beta),
            "trig": lambda: trig_hermitian(cs, float(cfg.get("amplitude", 1.0))),
            "electromagnetic": lambda: electromagnetic(cs),
        }
    elif cls == "bounded":
        amp = float(cfg.get("amplitude", 0.5))
        seed = int(cfg.get("seed", rng_seed))
        table = {
            "zero": lambda: Potential(),
            "random-hermitian": lambda: random_bounded(m, N, np.random.Generator(np.random.Philox(seed)), amp),
            "random": lambda: random_bounded(m, N, np.random.Generator(np.random.Philox(seed)), amp, hermitian=False),
            "non-hermitian": lambda: non_hermitian_bounded(m, float(cfg.get("gamma", 0.2))),
        }
    else:
        raise ValueError(f"unknown potential class {cls!r}; expected quadratic, hermitian or bounded")
    if name not in table:
        raise ValueError(f"unknown {cls} potential {name!r}; choose from {sorted(table)}")
    return table[name]()


def potential_from_config(cfg, cs: CliffordSystem, seed: int = 0) -> Potential:
    """Build a potential from ``{"class": ..., "name": ...}`` or a list of those."""
    if cfg is None:
        return Potential()
    items = cfg if isinstance(cfg, list) else [cfg]
    pot = Potential()
    for item in items:
        if not isinstance(item, dict):
            raise ValueError(f"potential entry must be an object, got {item!r}")
        pot = pot + _one(item, cs, seed)
    return pot
