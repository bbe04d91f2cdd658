import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from dirac_modspace.dirac import dirac_symbol, preset
from dirac_modspace.grid import Grid
from dirac_modspace.potentials import (
    HermitianC1,
    Potential,
    QuadraticDiagonal,
    characteristics_g,
    constant_hermitian,
    cos_profile,
    electromagnetic,
    eval_Qjk,
    eval_Vk,
    harmonic,
    inverted_harmonic,
    linear,
    non_hermitian_bounded,
    oscillating_linear,
    phase_h,
    potential_from_config,
    quadratic_as_hermitian,
    random_bounded,
    taylor_Q,
    taylor_V,
    trig_hermitian,
    xi_shift,
)

CS1 = preset("dirac1d")
CS2 = preset("dirac2d")


def sin_diag():
    s3 = np.diag([1.0, -1.0]).astype(complex)
    return Potential(hermitian=HermitianC1(
        value=lambda t, x: s3[:, :, None] * np.sin(x[0]),
        gradient=lambda t, x: (s3[:, :, None] * np.cos(x[0]))[None],
        bound=1.0, name="sin-diag"))


def test_qjk_closed_forms():
    y, x = np.array([[1.3, -2.0]]), np.array([[0.2, 4.0]])
    np.testing.assert_allclose(eval_Qjk(harmonic(1), 0.0, y, x, 0, 0), 0.5, atol=1e-15)
    np.testing.assert_allclose(eval_Qjk(linear([2.0]), 0.0, y, x, 0, 0), 0.0, atol=0)
    Q2 = taylor_Q(harmonic(2, 1.5), 0.0, np.ones((2, 3)), np.zeros((2, 3)))
    np.testing.assert_allclose(Q2, 0.5 * 2.25 * np.eye(2)[..., None] * np.ones(3), atol=1e-14)
    with pytest.raises(TypeError):
        eval_Qjk(constant_hermitian(np.eye(2)), 0.0, y, x, 0, 0)


@pytest.mark.parametrize("y,x", [(0.3, -1.1), (2.5, 0.0), (-3.0, 1.7)])
def test_qjk_cos_against_adaptive_quadrature(y, x):
    ref, _ = quad(lambda th: -np.cos(x + th * (y - x)) * (1 - th), 0, 1, epsabs=1e-14, epsrel=1e-14)
    val = eval_Qjk(cos_profile(1), 0.0, np.array([[y]]), np.array([[x]]), 0, 0)[0]
    assert val == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("y,x", [(0.3, -1.1), (2.5, 0.0), (-3.0, 1.7)])
def test_vk_sin_diag_against_adaptive_quadrature(y, x):
    ref, _ = quad(lambda th: np.cos(x + th * (y - x)), 0, 1, epsabs=1e-14, epsrel=1e-14)
    V = eval_Vk(sin_diag(), 0.0, np.array([[y]]), np.array([[x]]), 0)[..., 0]
    np.testing.assert_allclose(V, np.diag([ref, -ref]), atol=1e-12)
    assert np.all(eval_Vk(constant_hermitian(CS1.beta), 0.0, np.array([[y]]), np.array([[x]]), 0) == 0)
    with pytest.raises(TypeError):
        taylor_V(harmonic(1), 0.0, np.array([[y]]), np.array([[x]]))


def _quadratic_library():
    return [harmonic(1), inverted_harmonic(1, 0.7), linear([0.4]), cos_profile(1, 0.8)]


def _hermitian_library(cs):
    return [trig_hermitian(cs, 0.9), electromagnetic(cs), constant_hermitian(0.5 * cs.beta)]


@given(seed=st.integers(0, 2**32 - 1), which=st.integers(0, 3))
def test_second_order_taylor_identity_1d(seed, which):
    rng = np.random.Generator(np.random.Philox(seed))
    pot = _quadratic_library()[which]
    y, x = rng.uniform(-6, 6, (1, 100)), rng.uniform(-6, 6, (1, 100))
    q = pot.quadratic
    d = y - x
    rhs = q.value(0, x) + np.sum(d * q.gradient(0, x), 0) + np.einsum("j...,jk...,k...->...", d,
                                                                       taylor_Q(pot, 0, y, x), d)
    assert np.abs(q.value(0, y) - rhs).max() < 1e-10


@given(seed=st.integers(0, 2**32 - 1), which=st.integers(0, 2), dim=st.sampled_from([1, 2]))
def test_first_order_taylor_identity(seed, which, dim):
    rng = np.random.Generator(np.random.Philox(seed))
    cs = CS1 if dim == 1 else CS2
    pot = _hermitian_library(cs)[which]
    y, x = rng.uniform(-5, 5, (dim, 100)), rng.uniform(-5, 5, (dim, 100))
    h = pot.hermitian
    rhs = h.value(0, x) + np.einsum("k...,kij...->ij...", y - x, taylor_V(pot, 0, y, x))
    assert np.abs(h.value(0, y) - rhs).max() < 1e-10


def test_second_order_identity_2d_cos(rng):
    pot = cos_profile(2, 1.0)
    y, x = rng.uniform(-5, 5, (2, 100)), rng.uniform(-5, 5, (2, 100))
    q, d = pot.quadratic, y - x
    rhs = q.value(0, x) + np.sum(d * q.gradient(0, x), 0) + np.einsum("j...,jk...,k...->...", d,
                                                                       taylor_Q(pot, 0, y, x), d)
    assert np.abs(q.value(0, y) - rhs).max() < 1e-10


def test_panels_improve_long_segments():
    pot = cos_profile(1)
    y, x = np.array([[9.0]]), np.array([[-9.0]])
    ref, _ = quad(lambda th: -np.cos(x[0, 0] + th * 18) * (1 - th), 0, 1, epsabs=1e-14, limit=200)
    e1 = abs(taylor_Q(pot, 0, y, x, panels=1)[0, 0, 0] - ref)
    e_auto = abs(taylor_Q(pot, 0, y, x)[0, 0, 0] - ref)
    assert e_auto < 1e-12 and e_auto < e1
    with pytest.raises(ValueError):
        taylor_Q(pot, 0, y, x, panels=0)


def test_qjk_symmetric(rng):
    pot = Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: np.sin(x[0]) * np.cos(x[1]),
        gradient=lambda t, x: np.stack([np.cos(x[0]) * np.cos(x[1]), -np.sin(x[0]) * np.sin(x[1])]),
        hessian=lambda t, x: np.stack([
            np.stack([-np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])]),
            np.stack([-np.cos(x[0]) * np.sin(x[1]), -np.sin(x[0]) * np.cos(x[1])])]),
        bound=1.0))
    Q = taylor_Q(pot, 0, rng.uniform(-2, 2, (2, 50)), rng.uniform(-2, 2, (2, 50)))
    np.testing.assert_allclose(Q[0, 1], Q[1, 0], atol=0)
    assert np.abs(Q).max() <= 0.5 * 1.0 + 1e-12


def test_characteristics_closed_forms(rng):
    x = rng.uniform(-3, 3, (1, 20))
    xi = rng.uniform(-3, 3, (1, 20))
    np.testing.assert_array_equal(characteristics_g(Potential(), 0.7, 0.1, x, xi), xi)
    np.testing.assert_array_equal(characteristics_g(linear([0.0]), 0.7, 0.1, x, xi), xi)
    np.testing.assert_allclose(characteristics_g(harmonic(1), 0.7, 0.1, x, xi), xi - 0.6 * x, atol=1e-15)
    pot = oscillating_linear(1)
    np.testing.assert_array_equal(characteristics_g(pot, 0.4, 0.4, x, xi), xi)
    g = characteristics_g(pot, 1.3, 0.2, x, xi, substeps=1024)
    np.testing.assert_allclose(g, xi - (np.sin(1.3) - np.sin(0.2)), atol=1e-12)
    assert np.all(xi_shift(non_hermitian_bounded(2), 1.0, 0.0, x) == 0)


@given(seed=st.integers(0, 2**32 - 1))
def test_shift_independent_of_xi(seed):
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.uniform(-3, 3, (2, 10))
    a, b = rng.uniform(-5, 5, (2, 2, 10))
    # g adds one x-dependent shift, computed without reference to xi
    for pot in (harmonic(2), cos_profile(2), oscillating_linear(2)):
        shift = xi_shift(pot, 0.9, 0.2, x)
        assert np.array_equal(characteristics_g(pot, 0.9, 0.2, x, a), a + shift)
        assert np.array_equal(characteristics_g(pot, 0.9, 0.2, x, b), b + shift)


def test_phase_h_cases(rng):
    xi = rng.uniform(-3, 3, (1, 10))
    x = rng.uniform(-3, 3, (1, 10))
    const = Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: 0.3 * np.ones(x.shape[1:]), gradient=lambda t, x: np.zeros_like(x),
        hessian=lambda t, x: np.zeros((1, 1) + x.shape[1:]), bound=0.0))
    np.testing.assert_allclose(phase_h(CS1, const, 0.5, 0.0, x, xi),
                               dirac_symbol(CS1, xi) + 0.3 * np.eye(2)[..., None], atol=1e-15)
    h = phase_h(CS1, harmonic(1), 0.5, 0.1, x, xi)
    expected = dirac_symbol(CS1, xi - 0.4 * x) - 0.5 * x[0] ** 2 * np.eye(2)[..., None]
    np.testing.assert_allclose(h, expected, atol=1e-13)


@given(seed=st.integers(0, 2**32 - 1))
def test_phase_h_hermitian(seed):
    rng = np.random.Generator(np.random.Philox(seed))
    x, xi = rng.uniform(-4, 4, (2, 2, 8))
    for pot in (harmonic(2), cos_profile(2), oscillating_linear(2)):
        h = phase_h(CS2, pot, rng.uniform(-1, 1), rng.uniform(-1, 1), x, xi)
        assert np.abs(h - np.conj(np.swapaxes(h, 0, 1))).max() < 1e-13


def test_library_invariants_and_check():
    g = Grid(1, 64, 10.0)
    for pot in _quadratic_library() + _hermitian_library(CS1) + [
            random_bounded(2, 1, np.random.Generator(np.random.Philox(0)), 0.5),
            non_hermitian_bounded(2, 0.3)]:
        pot.check(g, 2, times=(0.0, 0.5))
    bad = Potential(quadratic=QuadraticDiagonal(
        value=lambda t, x: x[0] ** 3, gradient=lambda t, x: 3 * x**2,
        hessian=lambda t, x: (6 * x[0])[None, None], bound=10.0))
    with pytest.raises(ValueError):
        bad.check(g, 2)
    nh = non_hermitian_bounded(2, 0.3)
    assert not nh.is_hermitian
    assert 0.5 * 0.3 <= nh.bounded_sup(g) <= 0.3 * 1.2


def test_potential_sums_and_labels():
    p = harmonic(1) + non_hermitian_bounded(2)
    assert p.label == "harmonic+non-hermitian" and not p.is_zero and Potential().is_zero
    with pytest.raises(ValueError):
        harmonic(1) + linear([1.0])
    assert oscillating_linear(1).time_dependent and not harmonic(1).time_dependent


def test_quadratic_as_hermitian():
    x = np.linspace(-2, 2, 9)[None]
    lin = linear([0.7]) + non_hermitian_bounded(2)
    moved = quadratic_as_hermitian(lin, 2)
    assert moved.quadratic is None and moved.bounded is lin.bounded
    np.testing.assert_allclose(moved.matrix(0, x, 2), lin.matrix(0, x, 2), atol=0)
    with pytest.raises(ValueError):
        quadratic_as_hermitian(harmonic(1), 2)


def test_from_config():
    p = potential_from_config([{"class": "quadratic", "name": "harmonic", "omega": 2.0},
                               {"class": "bounded", "name": "random-hermitian", "seed": 3}], CS1)
    assert p.quadratic.bound == 4.0 and p.bounded.hermitian
    assert potential_from_config(None, CS1).is_zero
    assert potential_from_config({"class": "hermitian", "name": "electromagnetic"}, CS1).hermitian is not None
    with pytest.raises(ValueError):
        potential_from_config({"class": "quadratic", "name": "cubic"}, CS1)
    with pytest.raises(ValueError):
        potential_from_config({"class": "weird", "name": "x"}, CS1)
    with pytest.raises(ValueError):
        potential_from_config(["harmonic"], CS1)
