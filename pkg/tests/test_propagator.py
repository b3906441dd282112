import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisomhd.propagator import (
    DecayFit,
    InitialDataSpec,
    QuadratureGrid,
    UnresolvedDataError,
    fit_decay,
    log_times,
    propagate_linear,
)
from anisomhd.spectral import PhysParams, make_grid, sobolev_norm

UNIT = PhysParams(1.0, 1.0)


def test_quadrature_weights_sum():
    q = QuadratureGrid(extent=8.0, m=64)
    for x, w in (q.horizontal(), q.vertical()):
        assert w.sum() == pytest.approx(16.0)
        assert np.all(np.diff(x) > 0)


def test_initial_norm_matches_closed_form():
    # unprojected Gaussian with unit amplitudes: ||g||^2 = pi^{3/2} per field
    data = InitialDataSpec(project=False)
    s = propagate_linear(UNIT, data, QuadratureGrid(m=64, grading=0.0), [0.0])
    assert s.u["id"][0] ** 2 == pytest.approx(np.pi**1.5, rel=1e-8)
    assert s.b["id"][0] ** 2 == pytest.approx(np.pi**1.5, rel=1e-8)


def test_periodic_sampling_converges_to_whole_space():
    # Riemann-sum error of the projected spectrum decays like L^-3
    data = InitialDataSpec()
    ref = propagate_linear(UNIT, data, QuadratureGrid(m=64, grading=0.0), [0.0]).pair_norm("id")[0]
    errs = [abs(sobolev_norm(data.on_grid(make_grid(16 * L, 16 * L, 16 * L, L)), 0) / ref - 1) for L in (2, 4)]
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] == pytest.approx(8, rel=0.2)


def test_norms_nonincreasing():
    s = propagate_linear(UNIT, InitialDataSpec(), QuadratureGrid(m=48), log_times(0.1, 100, 12, True))
    assert np.all(np.diff(s.pair_norm("id")) <= 1e-12)


def test_unresolved_data_rejected():
    with pytest.raises(UnresolvedDataError):
        propagate_linear(UNIT, InitialDataSpec(sigma=(0.2, 1.0, 1.0)), QuadratureGrid(extent=8.0, m=32), [0.0])


@given(a=st.floats(-3, -0.1), c=st.floats(0.1, 10))
def test_fit_recovers_power_law(a, c):
    t = log_times(10, 1000, 20)
    f = fit_decay(t, c * (1 + t) ** a)
    assert isinstance(f, DecayFit)
    assert f.exponent == pytest.approx(a, abs=1e-10)
    assert f.r2 == pytest.approx(1.0)


def test_fit_errors():
    t = log_times(10, 1000, 20)
    with pytest.raises(ValueError):
        fit_decay(t, -np.ones_like(t))
    with pytest.raises(ValueError):
        fit_decay(t[:3], np.ones(3))
    with pytest.raises(ValueError):
        fit_decay(t, np.ones_like(t), window=(1, 1000))
