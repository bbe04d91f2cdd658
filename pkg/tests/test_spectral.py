import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirac_modspace.dirac import dirac_multiplier, dirac_symbol, preset
from dirac_modspace.grid import Grid, SpinorField, quadrature_sum, random_band_limited
from dirac_modspace.spectral import MultiplierSymbol, apply_multiplier, bessel, forward_ft, inverse_ft


def test_zero_and_gaussian_self_dual():
    g = Grid(1, 512, 20.0)
    assert np.all(forward_ft(SpinorField(g, np.zeros(512))).data == 0)
    F = forward_ft(SpinorField(g, np.exp(-g.x**2 / 2)))
    assert F.space == "xi"
    np.testing.assert_allclose(F.data[0], np.exp(-g.xi**2 / 2), atol=1e-10)


def test_single_sample_matches_direct_sum():
    g = Grid(1, 16, 3.0)
    d = np.zeros(16, dtype=complex)
    d[5] = 1.0 - 2.0j
    F = forward_ft(SpinorField(g, d)).data[0]
    direct = np.array([sum(d[k] * np.exp(-1j * g.xi[j] * g.x[k]) for k in range(16)) for j in range(16)])
    np.testing.assert_allclose(F, direct * g.dx / np.sqrt(2 * np.pi), atol=1e-12)


def test_direct_sum_2d(rng):
    g = Grid(2, 8, 2.0)
    d = rng.standard_normal((1, 8, 8)) + 1j * rng.standard_normal((1, 8, 8))
    F = forward_ft(SpinorField(g, d)).data[0]
    X, Y = np.meshgrid(g.x, g.x, indexing="ij")
    ref = np.empty((8, 8), dtype=complex)
    for a in range(8):
        for b in range(8):
            ref[a, b] = np.sum(d[0] * np.exp(-1j * (g.xi[a] * X + g.xi[b] * Y)))
    np.testing.assert_allclose(F, ref * g.dx**2 / (2 * np.pi), atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), N=st.sampled_from([1, 2]))
def test_round_trip_and_parseval(seed, N):
    rng = np.random.Generator(np.random.Philox(seed))
    g = Grid(N, 16, 4.0)
    f = SpinorField(g, rng.standard_normal((2,) + g.shape) + 1j * rng.standard_normal((2,) + g.shape))
    F = forward_ft(f)
    back = inverse_ft(F)
    assert np.abs(back.data - f.data).max() <= 1e-12 * np.abs(f.data).max()
    assert quadrature_sum(F, 2) == pytest.approx(quadrature_sum(f, 2), rel=1e-11)


def test_spaces_are_enforced():
    g = Grid(1, 8, 1.0)
    f = SpinorField(g, np.ones(8))
    with pytest.raises(ValueError):
        inverse_ft(f)
    with pytest.raises(ValueError):
        forward_ft(forward_ft(f))


def test_identity_and_derivative_multipliers():
    g = Grid(1, 64, np.pi)
    f = SpinorField(g, np.sin(g.x))
    out = apply_multiplier(MultiplierSymbol(lambda xi: np.ones(xi.shape[1:])), f)
    np.testing.assert_allclose(out.data, f.data, atol=1e-12)
    d = apply_multiplier(MultiplierSymbol(lambda xi: 1j * xi[0]), f)
    np.testing.assert_allclose(d.data[0], np.cos(g.x), atol=1e-12)


def test_dirac_symbol_on_plane_wave():
    cs = preset("dirac1d", 0.7)
    g = Grid(1, 64, 8.0)
    xi0 = g.xi[37]
    v = np.array([0.3 - 1j, 2.0])
    f = SpinorField(g, v[:, None] * np.exp(1j * xi0 * g.x))
    out = apply_multiplier(dirac_multiplier(cs), f)
    expected = (dirac_symbol(cs, np.array([xi0])) @ v)[:, None] * np.exp(1j * xi0 * g.x)
    np.testing.assert_allclose(out.data, expected, atol=1e-12)


def test_multiplier_shape_and_hermitian_checks():
    g = Grid(1, 8, 1.0)
    f = SpinorField(g, np.ones((2, 8)))
    three = MultiplierSymbol(lambda xi: np.zeros((3, 3) + xi.shape[1:]), m=3)
    with pytest.raises(ValueError):
        apply_multiplier(three, f)
    fake = MultiplierSymbol(lambda xi: np.ones((2, 2) + xi.shape[1:]) * 1j, m=2, hermitian=True)
    with pytest.raises(ValueError):
        fake.sample(g)


def test_bessel_gaussian_oracle():
    # (1 - d^2) exp(-x^2/2) = (2 - x^2) exp(-x^2/2)
    g = Grid(1, 256, 16.0)
    f = SpinorField(g, np.exp(-g.x**2 / 2))
    out = bessel(2.0, f)
    np.testing.assert_allclose(out.data[0], (2 - g.x**2) * np.exp(-g.x**2 / 2), atol=1e-8)
    np.testing.assert_allclose(bessel(0.0, f).data, f.data, atol=1e-14)


@given(s=st.floats(-3, 3), seed=st.integers(0, 2**32 - 1))
def test_bessel_inverse_pair(s, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    g = Grid(1, 64, 8.0)
    f = random_band_limited(g, 2, rng, cutoff=5.0)
    back = bessel(-s, bessel(s, f))
    assert np.abs(back.data - f.data).max() <= 1e-11 * np.abs(f.data).max()
