"""The ten acceptance criteria at their stated tolerances, one PASS/FAIL line each."""
import time

import numpy as np
import pytest

from anisomhd.bounds import SamplerSpec, audit_bounds, default_times
from anisomhd.cli import CONVOLUTION_CASES, HEAT_CASES
from anisomhd.energy import energy_series, initial_data_norms
from anisomhd.inequalities import convolution_bound_check, heat_decay_check, inequality_suite
from anisomhd.linear import kernel_matrix, mode_symbol, vieta_residuals
from anisomhd.propagator import InitialDataSpec, QuadratureGrid, fit_decay, log_times, propagate_linear
from anisomhd.solver import (
    SolverConfig,
    convergence_order,
    linear_evolution,
    pair_distance,
    random_initial_data,
    run,
)
from anisomhd.spectral import PhysParams, sobolev_norm

STABILITY_DELTAS = (1e-2, 1e-3, 1e-4)


def test_01_kernel_identity_and_semigroup(acceptance):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    id_err = semi_err = 0.0
    # 100 (mu, eta) pairs x 100 frequencies
    for _ in range(100):
        p = PhysParams(*rng.uniform(0.05, 5.0, 2))
        sym = mode_symbol(p, rng.normal(scale=3.0, size=(100, 3)))
        id_err = max(id_err, np.abs(kernel_matrix(sym, 0.0).as_matrix() - np.eye(2)).max())
        t, s = rng.uniform(0, 5, 100), rng.uniform(0, 5, 100)
        t, s = np.where(t > 0, t, 5.0), np.where(s > 0, s, 5.0)
        lhs = kernel_matrix(sym, t + s).as_matrix()
        rhs = kernel_matrix(sym, t).as_matrix() @ kernel_matrix(sym, s).as_matrix()
        scale = np.maximum(np.abs(lhs).max(axis=(-2, -1)), 1e-300)
        semi_err = max(semi_err, float((np.abs(lhs - rhs).max(axis=(-2, -1)) / scale).max()))
    elapsed = time.perf_counter() - start
    ok = id_err <= 1e-12 and semi_err <= 1e-8 and elapsed < 10
    acceptance(1, "kernel identity & semigroup", ok,
               f"|K(0)-I| = {id_err:.2e}, semigroup rel {semi_err:.2e}, {elapsed:.2f} s")
    assert ok


def test_02_eigenvalue_structure(acceptance):
    rng = np.random.default_rng(2)
    xi = rng.normal(scale=10.0, size=(100_000, 3)) * rng.choice([1e-3, 1, 1e2], size=(100_000, 3))
    r_sum, r_prod = vieta_residuals(mode_symbol(PhysParams(1.0, 1.0), xi))
    vieta = float(max(r_sum.max(), r_prod.max()))
    unit = PhysParams(1.0, 1.0)
    s1, s2 = mode_symbol(unit, (1.0, 0.0, 0.0)), mode_symbol(unit, (0.0, 1.0, 0.0))
    double = max(abs(s1.lambda1 + 1), abs(s1.lambda2 + 1))
    pair = sorted([complex(s2.lambda1), complex(s2.lambda2)], key=lambda z: z.imag)
    expected = [complex(-0.5, -np.sqrt(3) / 2), complex(-0.5, np.sqrt(3) / 2)]
    cplx = max(abs(a - b) for a, b in zip(pair, expected))
    ok = vieta <= 1e-10 and double <= 1e-12 and cplx <= 1e-12
    acceptance(2, "eigenvalue structure", ok,
               f"Vieta max {vieta:.2e}, double root err {double:.1e}, complex pair err {cplx:.1e}")
    assert ok


def test_03_bound_audit(acceptance):
    # A22 needs mu / eta away from 1; the audit runs at mu = 1, eta = 0.2
    start = time.perf_counter()
    reports = audit_bounds(PhysParams(1.0, 0.2), SamplerSpec(n_per_subdomain=1000), default_times(64), seed=0)
    elapsed = time.perf_counter() - start
    wanted = {r.label: r for r in reports if r.label in ("A1", "A21", "A22", "A23")}
    ok = (len(wanted) == 4 and all(r.passed and r.n_samples >= 1000 for r in wanted.values())
          and elapsed < 60)
    detail = ", ".join(f"{k} {r.max_ratio:.3f}" for k, r in wanted.items())
    acceptance(3, "subdomain bound audit", ok, f"max validation ratio {detail}; {elapsed:.1f} s")
    assert ok


def test_04_linear_decay_exponents(acceptance):
    start = time.perf_counter()
    times = log_times(1.0, 1000.0, 61, include_zero=True)
    series = propagate_linear(PhysParams(1.0, 1.0), InitialDataSpec(), QuadratureGrid(8.0, 128, 6.0), times)
    q = series.quantities()
    fits = {k: fit_decay(times, q[k], (10.0, 1000.0), k) for k in
            ("L2", "gradh_L2", "d3_L2", "d1gradh_L2", "d2gradh_L2")}
    elapsed = time.perf_counter() - start
    e = {k: f.exponent for k, f in fits.items()}
    ok = (abs(e["L2"] + 0.5) <= 0.05 and abs(e["gradh_L2"] + 1.0) <= 0.07 and abs(e["d3_L2"] + 0.5) <= 0.07
          and e["d1gradh_L2"] <= -1.30 and e["d2gradh_L2"] <= -1.30
          and all(f.r2 >= 0.99 for f in fits.values()) and elapsed < 600)
    detail = ", ".join(f"{k} {v:+.3f}" for k, v in e.items())
    acceptance(4, "linear decay exponents", ok,
               f"{detail}; min R2 {min(f.r2 for f in fits.values()):.5f}; {elapsed:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def stability_runs():
    out = {}
    for delta in STABILITY_DELTAS:
        cfg = SolverConfig(n1=48, n2=48, n3=48, mu=1.0, eta=1.0, dt=1e-2, T=50.0)
        p0 = random_initial_data(cfg.grid, delta, seed=0)
        start = time.perf_counter()
        error = None
        try:
            traj = run(cfg, p0)
        except Exception as exc:  # a guard trip is a criterion failure, reported below
            traj, error = None, exc
        out[delta] = (p0, traj, time.perf_counter() - start, error)
    return out


@pytest.mark.slow
def test_05_nonlinear_stability(acceptance, stability_runs):
    p0, traj, elapsed, error = stability_runs[1e-3]
    if traj is None:
        acceptance(5, "nonlinear stability", False, f"run aborted: {error}")
        pytest.fail(str(error))
    growth = float(traj.column("H3").max() / traj.initial_H3)
    residual = float(traj.column("energy_residual").max())
    ok = growth <= 2.0 and residual <= 1e-6 and elapsed < 900
    acceptance(5, "nonlinear stability", ok,
               f"sup H3 / initial {growth:.4f}, max energy residual {residual:.2e}, {elapsed:.0f} s")
    assert ok


def test_06_linear_nonlinear_consistency(acceptance):
    # deviation in L^2 for data of H^3 norm delta; the nonlinear correction is O(delta^2)
    dev, rel = {}, {}
    for delta in (1e-2, 1e-3):
        cfg = SolverConfig(n1=48, n2=48, n3=48, dt=1e-2, T=1.0, output_every=100)
        p0 = random_initial_data(cfg.grid, delta, seed=0)
        lin = linear_evolution(p0, cfg.params, 1.0)
        dev[delta] = pair_distance(run(cfg, p0).final, lin)
        rel[delta] = dev[delta] / sobolev_norm(lin, 0)
    ratio = dev[1e-2] / dev[1e-3]
    ok = 30 <= ratio <= 300
    acceptance(6, "linear/nonlinear consistency", ok,
               f"deviation {dev[1e-2]:.3e} vs {dev[1e-3]:.3e}, ratio {ratio:.2f} "
               f"(divided by the linear solution norm: ratio {rel[1e-2] / rel[1e-3]:.2f})")
    assert ok


@pytest.mark.slow
def test_07_energy_ledger_bounded(acceptance, stability_runs):
    sup = {}
    for delta, (p0, traj, _, error) in stability_runs.items():
        if traj is None:
            acceptance(7, "energy ledger boundedness", False, f"run at delta={delta:g} aborted: {error}")
            pytest.fail(str(error))
        sup[delta] = float(np.max(energy_series(traj).E0) / initial_data_norms(p0).F)
    C = 1.05 * sup[1e-2]
    ok = all(v <= C for v in sup.values())
    detail = ", ".join(f"delta={d:g}: {v:.4f}" for d, v in sup.items())
    acceptance(7, "energy ledger boundedness", ok, f"sup E0/F {detail}; C = {C:.4f}")
    assert ok


def test_08_inequality_suite(acceptance):
    start = time.perf_counter()
    records = inequality_suite(n_samples=1000, seed=0)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in records) and elapsed < 300
    detail = ", ".join(f"{r.inequality} {r.max_ratio:.3g}/{r.saturation_ratio:.3f}" for r in records)
    acceptance(8, "inequality suite", ok, f"max ratio/saturation {detail}; {elapsed:.0f} s")
    assert ok


def test_09_heat_and_convolution(acceptance):
    heat = [heat_decay_check(*c) for c in HEAT_CASES]
    conv = [convolution_bound_check(s1, s2) for s1, s2 in CONVOLUTION_CASES]
    ok = all(h.error <= 0.03 for h in heat) and all(c.passed for c in conv)
    detail = ", ".join(f"{h.measured:+.4f} vs {h.predicted:+.2f}" for h in heat)
    cdetail = ", ".join(f"({c.s1:g},{c.s2:g}) {c.max_ratio:.3f}" for c in conv)
    acceptance(9, "heat decay & convolution", ok, f"heat {detail}; convolution ratio/C {cdetail}")
    assert ok


def test_10_integrator_order(acceptance):
    etd = convergence_order("ETDRK2")
    ifrk = convergence_order("IFRK4")
    ok = etd.slope >= 1.9 and ifrk.slope >= 3.8
    acceptance(10, "integrator order", ok, f"ETDRK2 slope {etd.slope:.3f}, IFRK4 slope {ifrk.slope:.3f}")
    assert ok
