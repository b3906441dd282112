import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisomhd.spectral import (
    FieldPair,
    PhysParams,
    ScalarField,
    SpectralGrid,
    VectorField,
    anisotropic_seminorms,
    derivative,
    forward,
    inverse,
    l2_norm_real,
    leray_project,
    make_grid,
    mixed_norm_L2L1,
    sobolev_norm,
    transform,
    zeros,
)

even = st.integers(2, 6).map(lambda k: 2 * k)


def random_real(grid, rng, ncomp=3):
    return rng.normal(size=(ncomp,) + grid.shape)


def test_grid_validation():
    with pytest.raises(ValueError):
        SpectralGrid(7, 8, 8)
    with pytest.raises(ValueError):
        SpectralGrid(2, 8, 8)
    with pytest.raises(ValueError):
        SpectralGrid(8, 8, 8, L=0.0)
    with pytest.raises(ValueError):
        PhysParams(mu=0.0)


def test_wavenumbers_layout():
    g = make_grid(8, 8, 8, L=2.0)
    k1 = g.axis_wavenumbers(1)
    assert k1.max() == pytest.approx(4 / 2.0)
    assert k1.min() == pytest.approx(-3 / 2.0)
    assert g.spectral_shape == (8, 8, 5)


@given(n1=even, n2=even, n3=even, L=st.floats(0.3, 3.0), seed=st.integers(0, 2**32 - 1))
def test_roundtrip_and_parseval(n1, n2, n3, L, seed):
    g = SpectralGrid(n1, n2, n3, L)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=g.shape)
    c = forward(f, g)
    assert np.allclose(inverse(c, g), f, atol=1e-12)
    spectral = sobolev_norm(ScalarField(g, c, "spectral"), 0)
    assert spectral == pytest.approx(l2_norm_real(f, g), rel=1e-12)


def test_transform_direction_errors():
    g = make_grid(8, 8, 8)
    f = zeros(g, vector=False, representation="real")
    with pytest.raises(ValueError):
        transform(transform(f, "forward"), "forward")
    with pytest.raises(ValueError):
        transform(f, "inverse")


def test_single_mode_derivative():
    g = make_grid(16, 16, 16, L=1.0)
    x1, x2, x3 = g.coordinates()
    f = ScalarField(g, np.sin(2 * x1) * np.cos(x3) + np.zeros(g.shape), "real")
    d = transform(derivative(transform(f, "forward"), 1), "inverse")
    assert np.allclose(d.data, 2 * np.cos(2 * x1) * np.cos(x3), atol=1e-12)
    d33 = transform(derivative(transform(f, "forward"), 3, 2), "inverse")
    assert np.allclose(d33.data, -np.sin(2 * x1) * np.cos(x3), atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_leray_projection_is_idempotent_and_solenoidal(seed):
    g = make_grid(8, 8, 8)
    rng = np.random.default_rng(seed)
    v = VectorField(g, forward(random_real(g, rng), g), "spectral")
    p = leray_project(v)
    assert np.allclose(leray_project(p).data, p.data, atol=1e-12)
    pair = FieldPair(p, p)
    assert pair.divergence_residual() < 1e-12
    # projection is an orthogonal contraction
    assert sobolev_norm(p, 0) <= sobolev_norm(v, 0) * (1 + 1e-12)
    # keeps real fields real
    assert np.allclose(forward(inverse(p.data, g), g), p.data, atol=1e-12)


def test_sobolev_single_mode_value():
    g = make_grid(8, 8, 8)
    x1, x2, x3 = g.coordinates()
    f = ScalarField(g, np.sin(x1 + x2) + np.zeros(g.shape), "real")
    # ||f||^2 = (2 pi)^3 / 2, weight (1 + 2)^s
    for s in range(4):
        assert sobolev_norm(f, s) ** 2 == pytest.approx(3**s * (2 * np.pi) ** 3 / 2, rel=1e-12)
    with pytest.raises(ValueError):
        sobolev_norm(f, 4)


def test_mixed_norm_gaussian():
    g = make_grid(64, 64, 64, L=2.0)
    X = g.centered_coordinates()
    G = np.exp(-(X[0] ** 2 + X[1] ** 2 + X[2] ** 2) / 2)
    assert mixed_norm_L2L1(ScalarField(g, G, "real")) == pytest.approx(2 * np.pi * np.pi**0.25, rel=1e-8)
    z = np.zeros_like(G)
    pair = FieldPair(VectorField(g, np.stack([G, z, z]), "real"), VectorField(g, np.stack([G, z, z]), "real"))
    assert mixed_norm_L2L1(pair) ** 2 == pytest.approx(2 * (2 * np.pi * np.pi**0.25) ** 2, rel=1e-8)


def test_seminorms_zero_and_homogeneity(rng):
    g = make_grid(8, 8, 8)
    v = leray_project(VectorField(g, forward(random_real(g, rng), g), "spectral"))
    p = FieldPair(v, v)
    n1 = anisotropic_seminorms(p)
    n2 = anisotropic_seminorms(FieldPair(v.replace(2 * v.data), v.replace(2 * v.data)))
    for k in n1:
        assert n2[k] == pytest.approx(2 * n1[k], rel=1e-12)
    zero = zeros(g)
    assert all(val == 0 for val in anisotropic_seminorms(FieldPair(zero, zero)).values())


def test_fieldpair_check_rejects_divergence(rng):
    g = make_grid(8, 8, 8)
    v = VectorField(g, forward(random_real(g, rng), g), "spectral")
    with pytest.raises(ValueError):
        FieldPair(v, v).check()
