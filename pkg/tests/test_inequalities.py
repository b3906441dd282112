import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn

from anisomhd.inequalities import (
    BandLimitedField,
    convolution_bound,
    convolution_bound_check,
    convolution_integral,
    convolution_limit,
    gaussian_f1d_case,
    gaussian_norm,
    heat_decay_check,
    inequality_suite,
    line_sup_ratio,
    product_check,
    suite_to_json,
    triple_product_check,
)
from anisomhd.spectral import SpectralGrid, make_grid


@pytest.fixture(scope="module")
def grid():
    return make_grid(16, 16, 16)


def test_gaussian_f1d_value():
    case = gaussian_f1d_case()
    # ||f||^(1/2) ||f'||^(1/2) = pi^(1/4) 2^(-1/4), times sqrt 2
    assert case.rhs == pytest.approx(np.sqrt(2) * np.pi**0.25 * 2**-0.25, rel=1e-10)
    assert case.rhs == pytest.approx(1.583, abs=5e-4)
    assert case.ratio < 1


def test_f1d_extremal_profile():
    # e^{-|x|} attains ||f||_inf^2 = ||f|| ||f'|| exactly, so the sqrt 2 constant is sharp
    x = np.linspace(-40, 40, 2**16, endpoint=False)
    r = line_sup_ratio(np.exp(-np.abs(x)), x[1] - x[0])
    assert r / np.sqrt(2) == pytest.approx(1 / np.sqrt(2), rel=2e-3)


def test_single_mode_ratios_positive(grid):
    x1, x2, x3 = grid.coordinates()
    f = BandLimitedField.from_values(grid, np.sin(x1) * np.sin(x2) * np.sin(x3))
    for variant in ("Ine1", "Ine2"):
        case = triple_product_check(f, f, f, variant)
        assert 0 < case.ratio < np.inf
    # ||f||_inf = 1, ||f|| = ||d_i f|| = (2 pi)^{3/2} / (2 sqrt 2)
    c = product_check(f, variant="f1d", axes=(1,))
    assert c.ratio == pytest.approx(1 / np.sqrt(2 * np.pi * 0.5) / np.sqrt(2), rel=1e-12)


def test_zero_factor_gives_zero(grid, rng):
    f, g = BandLimitedField.random(grid, rng, 4), BandLimitedField.random(grid, rng, 4)
    zero = BandLimitedField(grid, np.zeros(grid.spectral_shape, complex))
    assert triple_product_check(f, g, zero, "Ine1").ratio == 0
    assert product_check(f, zero, "Ine3").ratio == 0


def test_fg_with_constant_factor():
    # g = 1 reduces fg to ||f||_{L2_x3 L1_xh} <= C ||f||^(1/2) ||d3 f||^(1/2)
    g = make_grid(128, 128, 16)
    x1, x2, x3 = g.coordinates()
    f = BandLimitedField.from_values(g, np.cos(x1) * np.cos(x2) * np.sin(2 * x3))
    one = BandLimitedField.from_values(g, np.ones(g.shape))
    case = product_check(f, one, "fg")
    lhs = (2 / np.pi) ** 2 * (2 * np.pi) ** 2 * np.sqrt(np.pi)
    rhs = np.sqrt((2 * np.pi) ** 3 / 8) * np.sqrt(2) * (2 * np.pi) ** 1.5
    assert case.lhs == pytest.approx(lhs, rel=1e-3)
    assert case.rhs == pytest.approx(rhs, rel=1e-12)


def test_axes_validation(grid, rng):
    f = BandLimitedField.random(grid, rng, 4)
    with pytest.raises(ValueError):
        triple_product_check(f, f, f, "Ine1", (1, 1, 2))
    with pytest.raises(ValueError):
        product_check(f, f, "bogus")


@pytest.mark.parametrize("variant", ["Ine1", "Ine2"])
def test_triple_product_dilation_invariance(variant):
    # compressing x1 by a leaves the ratio unchanged (both sides scale like a^-1)
    grid = SpectralGrid(512, 32, 32, 2.0)
    x1, x2, x3 = grid.centered_coordinates()
    ratios = []
    for a in (1, 2, 4, 8):
        fields = [np.exp(-((a * (x1 - c1)) ** 2 + (x2 - c2) ** 2 + (x3 - c3) ** 2) / 2)
                  for c1, c2, c3 in ((0, 0, 0), (0.3 / a, 0.2, -0.1), (-0.2 / a, -0.3, 0.4))]
        f, g, h = (BandLimitedField.from_values(grid, v) for v in fields)
        ratios.append(triple_product_check(f, g, h, variant, (1, 2, 3)).ratio)
    assert np.ptp(ratios) / np.mean(ratios) < 0.01


def test_suite_small_run():
    records = inequality_suite(n_samples=20, seed=3, n=16, kmax=4)
    assert [r.inequality for r in records] == ["Ine1", "Ine2", "Ine3", "fg", "f1d"]
    assert all(r.passed for r in records)
    assert inequality_suite(n_samples=20, seed=3, n=16, kmax=4) == records
    assert '"pass": true' in suite_to_json(records)


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1))
def test_f1d_never_exceeds_sqrt2(seed):
    grid = make_grid(16, 16, 16)
    f = BandLimitedField.random(grid, np.random.default_rng(seed), 6)
    for a in (1, 2, 3):
        assert product_check(f, variant="f1d", axes=(a,)).ratio <= 1 + 1e-12


def test_gaussian_norm_closed_form():
    assert gaussian_norm(2, 2) == pytest.approx(np.sqrt(np.pi))
    assert gaussian_norm(1, 1, 3.0) == pytest.approx(3 * np.sqrt(2 * np.pi))
    assert gaussian_norm(np.inf, 2) == 1.0


@pytest.mark.parametrize("case,expected", [((0, 2, 2, 2, 2), 0.0), ((0, 2, 1, 2, 2), -0.5),
                                           ((1, 2, 1, 2, 2), -1.0), ((0, 2, 1, np.inf, 1), -0.5)])
def test_heat_decay_rates(case, expected):
    r = heat_decay_check(*case)
    assert r.predicted == pytest.approx(expected)
    assert r.error <= 0.03 and r.r2 >= 0.99 or expected == 0


def test_heat_decay_validation():
    with pytest.raises(ValueError):
        heat_decay_check(0, 2, 2, 1, 2)
    with pytest.raises(ValueError):
        heat_decay_check(0, 0, 1, 2, 2)
    with pytest.raises(ValueError):
        heat_decay_check(0, 2, 1, 2, 3)


def test_convolution_integral_closed_forms():
    for t in (0.5, 10.0, 1e3, 1e6):
        c = 2 + t
        # partial fractions of 1 / (A B)^2 with A + B = 2 + t
        two = (2 * (1 - 1 / (1 + t)) + 4 * np.log1p(t) / c) / c**2
        assert convolution_integral(t, 2, 2) == pytest.approx(two, rel=1e-8)
        assert convolution_integral(t, 1, 1) == pytest.approx(2 * np.log1p(t) / c, rel=1e-8)
    assert convolution_integral(0.0, 1, 1) == 0.0


def test_convolution_limits():
    assert convolution_limit(2, 2) == 2
    assert convolution_limit(1.5, 3) == 0.5
    assert convolution_limit(1, 1) == 2 and convolution_limit(0.5, 1) == 1
    assert convolution_limit(0.3, 0.6) == pytest.approx(beta_fn(0.7, 0.4))
    t = 1e7
    assert convolution_integral(t, 0.3, 0.6) / convolution_bound(t, 0.3, 0.6) == pytest.approx(
        beta_fn(0.7, 0.4), rel=2e-2)


@pytest.mark.parametrize("s1,s2", [(2, 2), (0.5, 1), (0.3, 0.6), (1, 1), (0.5, 2)])
def test_convolution_bound_holds(s1, s2):
    assert convolution_bound_check(s1, s2).passed


def test_convolution_without_log_fails():
    res = convolution_bound_check(0.5, 1, drop_log=True)
    assert not res.passed
    assert np.all(np.diff(res.validation_ratios) > 0)


def test_convolution_small_time_ratio_vanishes():
    ratios = [convolution_integral(t, 0.5, 1) / convolution_bound(t, 0.5, 1, drop_log=True)
              for t in (1e-2, 1e-4, 1e-6)]
    assert ratios[-1] < 1e-5 and ratios == sorted(ratios, reverse=True)


def test_convolution_argument_validation():
    with pytest.raises(ValueError):
        convolution_bound_check(2, 1)
    with pytest.raises(ValueError):
        convolution_bound_check(0, 1)
