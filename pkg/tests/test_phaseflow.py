
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirac_modspace.dirac import dirac_symbol, free_dirac_propagate, preset
from dirac_modspace.grid import Grid, SpinorField, gaussian_packet, random_band_limited
from dirac_modspace.phaseflow import (
    PicardConvergenceWarning,
    SymbolRemainder,
    build_s_kernel,
    decomposition_residual,
    picard_propagate,
    remainder_R,
    remainder_R0,
    remainder_R1,
    remainder_Rtilde,
    xi_pullback,
)
from dirac_modspace.potentials import (
    BoundedMatrix,
    HermitianC1,
    Potential,
    constant_hermitian,
    harmonic,
    linear,
    oscillating_linear,
    quadratic_as_hermitian,
    random_bounded,
)
from dirac_modspace.refprop import EvolutionConfig, split_step_evolve
from dirac_modspace.spectral import MultiplierSymbol
from dirac_modspace.wavepacket import Window, gaussian_window, wp_transform

CS = preset("dirac1d")
ZERO = MultiplierSymbol(lambda xi: np.zeros((2, 2) + xi.shape[1:]), m=2, hermitian=True)
LAPLACE = MultiplierSymbol(lambda xi: np.sum(xi**2, axis=0), hermitian=True)


@pytest.fixture
def setup():
    g = Grid(1, 64, 10.0)
    phi = gaussian_window(g, 1.0)
    u = random_band_limited(g, 2, np.random.Generator(np.random.Philox(1)), cutoff=1.5)
    return g, phi, u


# ---------------------------------------------------------------- symbol remainder


@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(["dirac1d", "dirac2d", "dirac3d"]))
def test_dirac_remainder_is_minus_alpha_eta(seed, name):
    cs = preset(name, 1.7)
    rng = np.random.Generator(np.random.Philox(seed))
    eta, xi = rng.normal(scale=4, size=(2, cs.N, 6))
    b = SymbolRemainder(cs)(eta, xi)
    expected = -np.tensordot(cs.alphas, eta, axes=([0], [0]))
    np.testing.assert_allclose(b, expected, atol=1e-13)
    assert SymbolRemainder(cs).xi_independent


def test_symbol_bound_flags():
    ok, table = SymbolRemainder(CS).satisfies_bound(1, 1.0)
    assert ok and all(np.isfinite(v) for row in table.values() for v in row.values())
    ok2, _ = SymbolRemainder(preset("dirac2d")).satisfies_bound(2, 1.0, points=7)
    assert ok2
    bad, table = SymbolRemainder(LAPLACE).satisfies_bound(1, 1.0)
    assert not bad


# ---------------------------------------------------------------------- S kernel


def test_zero_symbol_kernel(setup):
    g, phi, u = setup
    S = build_s_kernel(ZERO, phi)
    assert np.abs(S.samples).max() == 0
    assert np.abs(remainder_R0(S, u).data).max() == 0


def test_dirac_kernel_closed_form(setup):
    g, phi, _ = setup
    S = build_s_kernel(CS, phi, 1)
    expected = -1j * CS.alphas[0][:, :, None] * np.conj(phi.derivative((1,)))[None, None]
    np.testing.assert_allclose(S.samples, expected, atol=1e-10)
    assert not S.xi_dependent
    with pytest.raises(ValueError):
        build_s_kernel(preset("dirac2d"), gaussian_window(Grid(2, 16, 8.0)), decay_order=1)


def test_kernel_decay_refinement(setup):
    g, phi, _ = setup
    a = build_s_kernel(CS, phi, 1).decay_table()
    b = build_s_kernel(CS, gaussian_window(g.refined(), 1.0), 1).decay_table()
    assert set(a) == {(0,), (1,), (2,)}
    for beta in a:
        assert np.isfinite(a[beta]) and abs(b[beta] - a[beta]) <= 0.05 * a[beta]


def test_xi_dependent_kernel_matches_identity(setup):
    g, phi, u = setup
    # scalar Laplacian: S depends on xi; the decomposition still holds
    S = build_s_kernel(LAPLACE, phi)
    assert S.xi_dependent
    assert decomposition_residual(LAPLACE, phi, u) < 1e-9


# -------------------------------------------------------------------- remainders


def test_decomposition_identity(setup):
    g, phi, u = setup
    assert decomposition_residual(CS, phi, u) < 1e-9


def test_r0_plane_wave(setup):
    g, phi, _ = setup
    k0 = 5
    xi0 = g.xi[32 + k0]
    v = np.array([1.0, -0.5j])
    u = SpinorField(g, v[:, None] * np.exp(1j * xi0 * g.x))
    R0 = remainder_R0(build_s_kernel(CS, phi), u).data
    W = wp_transform(phi, u).data
    diff = dirac_symbol(CS, np.array([xi0]))[..., None] - dirac_symbol(CS, g.xi[None])
    expected = np.einsum("ijk,jxk->ixk", diff, W)
    keep = np.abs(g.xi - xi0) < 0.9 * np.pi / g.dx
    np.testing.assert_allclose(R0[:, :, keep], expected[:, :, keep], atol=1e-10)


def test_remainder_R_cases(setup):
    g, phi, u = setup
    assert np.abs(remainder_R(linear([1.3]), phi, u, 0.0).data).max() == 0
    assert np.abs(remainder_R(harmonic(1), phi, u.with_data(np.zeros_like(u.data)), 0.0).data).max() == 0
    phi = gaussian_window(g, 0.8)
    R = remainder_R(harmonic(1), phi, u, 0.0).data
    psi = Window(g, g.x**2 * phi.samples)
    np.testing.assert_allclose(R, 0.5 * wp_transform(psi, u).data, atol=1e-11)


def test_remainder_R1_cases(setup):
    g, phi, u = setup
    assert np.abs(remainder_R1(constant_hermitian(CS.beta), phi, u, 0.0).data).max() == 0
    s3 = CS.beta
    def lift(x):
        return s3.reshape((2, 2) + (1,) * (x.ndim - 1))

    pot = Potential(hermitian=HermitianC1(
        value=lambda t, x: lift(x) * x[0], gradient=lambda t, x: (lift(x) * np.ones(x.shape[1:]))[None],
        bound=1.0))
    R1 = remainder_R1(pot, phi, u, 0.0).data
    W = wp_transform(Window(g, g.x * phi.samples), u).data
    np.testing.assert_allclose(R1, -np.einsum("ij,j...->i...", s3, W), atol=1e-11)
    assert np.abs(remainder_R1(pot, phi, u.with_data(np.zeros_like(u.data)), 0.0).data).max() == 0


def test_remainder_Rtilde_cases(rng):
    g = Grid(1, 16, 8.0)
    phi = gaussian_window(g, 0.7)
    u = SpinorField(g, rng.standard_normal((2, 16)) + 1j * rng.standard_normal((2, 16)))
    assert np.abs(remainder_Rtilde(harmonic(1), phi, u, 0.0).data).max() == 0
    ident = Potential(bounded=BoundedMatrix(lambda t, x: np.eye(2)[:, :, None] * np.ones(x.shape[1:]), bound=1.0))
    np.testing.assert_allclose(remainder_Rtilde(ident, phi, u, 0.0).data, wp_transform(phi, u).data, atol=1e-15)
    pot = random_bounded(2, 1, rng, 0.7, hermitian=False)
    V = pot.bounded.value(0.0, g.mesh())
    ref = np.zeros((2, 16, 16), dtype=complex)
    for a in range(16):
        for k in range(16):
            d = (g.x[a] - g.x[k] + g.L) % (2 * g.L) - g.L
            w = np.conj(phi.samples[int(round(d / g.dx)) + 8]) * g.dx
            ref[:, a] += w * (V[:, :, k] @ u.data[:, k])[:, None] * np.exp(-1j * g.x[k] * g.xi)[None]
    np.testing.assert_allclose(remainder_Rtilde(pot, phi, u, 0.0).data, ref, atol=1e-12 * np.abs(ref).max())


# ---------------------------------------------------------------------- transport


@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-3, 3))
def test_pullback_preserves_xi_l2(seed, shift):
    rng = np.random.Generator(np.random.Philox(seed))
    g = Grid(1, 32, 10.0)
    W = wp_transform(gaussian_window(g), random_band_limited(g, 1, rng, cutoff=2.0)).data
    P = xi_pullback(W, g, np.full((1, 32), shift))
    a = np.sum(np.abs(W) ** 2, axis=-1)
    b = np.sum(np.abs(P) ** 2, axis=-1)
    assert np.abs(a - b).max() < 1e-9 * a.max()


def test_pullback_grid_shift_is_roll(rng):
    g = Grid(1, 32, 10.0)
    W = wp_transform(gaussian_window(g), random_band_limited(g, 1, rng, cutoff=2.0)).data
    P = xi_pullback(W, g, np.full((1, 32), 3 * g.dxi))
    np.testing.assert_allclose(P, np.roll(W, -3, axis=-1), atol=1e-12 * np.abs(W).max())
    for p in (1, 3, np.inf):
        ref = np.linalg.norm(W[0], ord=p, axis=-1)
        np.testing.assert_allclose(np.linalg.norm(P[0], ord=p, axis=-1), ref, rtol=1e-9)
    assert xi_pullback(W, g, np.zeros((1, 32))) is W


# ------------------------------------------------------------------------ Picard


@pytest.mark.parametrize("pot,phase", [(linear([1.5]), lambda t, x: 1.5 * t * x),
                                       (oscillating_linear(1), lambda t, x: np.sin(t) * x)])
def test_linear_potential_closed_form(pot, phase):
    g = Grid(1, 64, 12.8)
    phi = gaussian_window(g, 1.0)
    psi = gaussian_packet(g, [1.0, 0.5j], 0.3, 1.0, 0.5)
    T = 0.25
    res = picard_propagate(ZERO, pot, phi, psi, T, iterations=0)
    exact = wp_transform(phi, psi.with_data(psi.data * np.exp(-1j * phase(T, g.x)))).data
    assert np.abs(res.final.data - exact).max() < 1e-9 * np.abs(exact).max()
    assert res.path == "quadratic"


def test_two_paths_agree_for_linear_potential():
    g = Grid(1, 64, 12.8)
    phi = gaussian_window(g, 1.0)
    psi = gaussian_packet(g, [1.0, 0.5j], 0.3, 1.0, 0.5)
    pot = linear([1.5])
    a = picard_propagate(ZERO, pot, phi, psi, 0.25, iterations=0).final.data
    b = picard_propagate(ZERO, quadratic_as_hermitian(pot, 2), phi, psi, 0.25, iterations=8,
                         quadrature="simpson").final.data
    assert np.abs(a - b).max() < 1e-8 * np.abs(a).max()


def test_free_dirac_single_iteration():
    g = Grid(1, 128, 51.2)
    phi = gaussian_window(g, 4.0)
    psi = gaussian_packet(g, [1.0, 0.5j], 0.0, 4.0, 0.0)
    res = picard_propagate(CS, None, phi, psi, 0.25, iterations=1)
    ref = free_dirac_propagate(CS, psi, 0.25)
    errs = [(s - ref).norm() / psi.norm() for s in res.iterate_spinors()]
    assert errs[1] < 1e-6 < errs[0]


@pytest.mark.slow
def test_harmonic_iterations_converge_to_split_step():
    g = Grid(1, 128, 12.8)
    phi = gaussian_window(g, 1.0)
    psi = gaussian_packet(g, [1.0, 0.5j], 0.0, 1.0, 0.0)
    res = picard_propagate(CS, harmonic(1), phi, psi, 0.25, iterations=3)
    ref = split_step_evolve(CS, harmonic(1), psi, EvolutionConfig(1e-4, 0.25)).final
    errs = [(s - ref).norm() / psi.norm() for s in res.iterate_spinors()]
    assert all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < 1e-3
    assert res.converged and len(res.history) == 3
    csv = res.history_csv().splitlines()
    assert csv[0] == "iteration,sup_difference,l2_difference" and len(csv) == 4


def test_picard_argument_checks(setup):
    g, phi, u = setup
    with pytest.raises(ValueError):
        picard_propagate(CS, harmonic(1) + constant_hermitian(CS.beta), phi, u, 0.1, path="quadratic")
    with pytest.raises(ValueError):
        picard_propagate(CS, harmonic(1), phi, u, 0.1, path="subquadratic")
    with pytest.raises(ValueError):
        picard_propagate(CS, None, phi, u, 0.0)
    with pytest.raises(ValueError):
        picard_propagate(CS, None, phi, u, 0.1, iterations=-1)
    with pytest.raises(ValueError):
        picard_propagate(CS, None, phi, u, 0.1, quadrature="gauss")
    with pytest.raises(ValueError):
        picard_propagate(CS, None, phi, u, 0.1, path="sideways")


def test_divergent_iteration_is_reported():
    # a huge bounded part over a long horizon makes successive differences grow
    g = Grid(1, 32, 10.0)
    phi = gaussian_window(g, 1.0)
    psi = gaussian_packet(g, [1.0, 0.0], 0.0, 1.0, 0.0)
    big = Potential(bounded=BoundedMatrix(lambda t, x: 40.0 * np.eye(2)[:, :, None] * np.cos(x[0]),
                                          bound=40.0))
    with pytest.warns(PicardConvergenceWarning):
        res = picard_propagate(ZERO, big, phi, psi, 1.0, iterations=3, snapshots_per_unit=8)
    assert not res.converged


def test_subquadratic_path_runs_and_is_unitary_ish():
    g = Grid(1, 64, 12.8)
    phi = gaussian_window(g, 1.0)
    psi = gaussian_packet(g, [1.0, 0.5j], 0.0, 1.0, 0.0)
    pot = constant_hermitian(0.5 * CS.beta)
    res = picard_propagate(CS, pot, phi, psi, 0.25, iterations=2)
    ref = split_step_evolve(CS, pot, psi, EvolutionConfig(1e-3, 0.25)).final
    assert res.path == "subquadratic"
    assert (res.spinor() - ref).norm() / psi.norm() < 1e-3
