"""Dealiased pseudo-spectral integration of the perturbation system on the torus.

The state is the pair (u_hat, b_hat) of rfft coefficients.  The linear part acts
on every vector component through the 2x2 generator A(xi) of ``linear``; the
nonlinear terms are

    N1 = P div(b (x) b - u (x) u),     N2 = div(u (x) b - b (x) u),

i.e. P(b.grad b - u.grad u) and b.grad u - u.grad b for solenoidal fields.

Matrix functions f(hA) of a 2x2 generator are written as alpha I + beta (hA - zbar I)
with zbar = -hS/2; since (hA - zbar I)^2 = d^2 I with d^2 = h^2 Gamma / 4, alpha and
beta are even/odd divided differences of f at zbar +- d and are real.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .checkpoint import save_pair
from .linear import mode_symbol
from .spectral import (
    FieldPair,
    PhysParams,
    SpectralGrid,
    VectorField,
    anisotropic_seminorms,
    divergence_coefficients,
    forward,
    inverse,
    leray_coefficients,
    sobolev_norm,
    spectral_sum,
)

Integrator = Literal["ETDRK2", "IFRK4"]

# Taylor radius in d = h sqrt(Gamma)/2 and the switch to the derivative recurrence
_TAYLOR_D = 0.1
_RECUR_Z = 40.0
_N_DERIV = 16
_GL_DERIV = np.polynomial.legendre.leggauss(48)


# --- scalar phi functions --------------------------------------------------


def phi(k: int, z) -> np.ndarray:
    """phi_k(z) = sum_j z^j / (j + k)!, for real or complex arrays."""
    z = np.asarray(z)
    small = np.abs(z) < 0.5
    zs = np.where(small, z, 0)
    series = np.zeros_like(zs, dtype=np.result_type(zs, float))
    term = np.ones_like(series) / math.factorial(k)
    for j in range(24):
        series = series + term
        term = term * zs / (j + k + 1)
    zl = np.where(small, 1.0, z)
    direct = np.exp(zl)
    for m in range(1, k + 1):
        direct = (direct - 1.0 / math.factorial(m - 1)) / zl
    return np.where(small, series, direct)


def phi_derivatives(kmax: int, z: np.ndarray, nder: int = _N_DERIV) -> np.ndarray:
    """phi_k^{(m)}(z) for k <= kmax, m < nder at real z <= 0; shape (kmax+1, nder, ...).

    Uses phi_k^{(m)}(z) = int_0^1 s^m e^{sz} (1-s)^{k-1}/(k-1)! ds for |z| < 40 and the
    recurrence z phi_k^{(m)} = phi_{k-1}^{(m)} - m phi_k^{(m-1)} beyond.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty((kmax + 1, nder) + z.shape)
    out[0] = np.exp(z)[None]
    near = np.abs(z) < _RECUR_Z
    x, w = _GL_DERIV
    s = (x + 1) / 2
    w = w / 2
    zn = np.where(near, z, 0.0)
    e = np.exp(np.multiply.outer(zn, s))  # (..., nodes)
    zf = np.where(near, -1.0, z)
    for k in range(1, kmax + 1):
        base = w * (1 - s) ** (k - 1) / math.factorial(k - 1)
        quad = np.stack([e @ (base * s**m) for m in range(nder)])
        rec = np.empty_like(quad)
        rec[0] = phi(k, zf)
        for m in range(1, nder):
            rec[m] = (out[k - 1, m] - m * rec[m - 1]) / zf
        out[k] = np.where(near, quad, rec)
    return out


@dataclass(frozen=True)
class ModeOperator:
    """Per-mode symmetric 2x2 matrix [[c11, c12], [c12, c22]] acting on (u_hat, b_hat)."""

    c11: np.ndarray
    c12: np.ndarray
    c22: np.ndarray

    def apply(self, u: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.c11 * u + self.c12 * b, self.c12 * u + self.c22 * b

    def as_matrix(self) -> np.ndarray:
        c11, c12, c22 = np.broadcast_arrays(self.c11, self.c12, self.c22)
        m = np.empty(c11.shape + (2, 2), dtype=complex)
        m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1] = c11, c12, c12, c22
        return m


def phi_operators(params: PhysParams, xi, h: float, kmax: int = 2) -> list[ModeOperator]:
    """[phi_0(hA), ..., phi_kmax(hA)] per mode; phi_0 is the propagator e^{hA}."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    sym = mode_symbol(params, xi)
    shape = np.shape(sym.S)
    if shape == ():
        ops = phi_operators(params, np.reshape([sym.xi1, sym.xi2, sym.xi3], (1, 3)), h, kmax)
        return [ModeOperator(o.c11[0], o.c12[0], o.c22[0]) for o in ops]
    zbar = -h * sym.S / 2
    d2 = h * h * sym.Gamma / 4
    g = h * sym.half_gap
    c = 1j * h * sym.xi2

    taylor = np.abs(d2) < _TAYLOR_D**2
    alpha = np.empty((kmax + 1,) + shape)
    beta = np.empty((kmax + 1,) + shape)

    if np.any(taylor):
        zt, dt2 = zbar[taylor], d2[taylor]
        der = phi_derivatives(kmax, zt)
        for k in range(kmax + 1):
            a = np.zeros_like(zt)
            b = np.zeros_like(zt)
            p = np.ones_like(zt)
            for j in range(_N_DERIV // 2):
                a += der[k, 2 * j] * p / math.factorial(2 * j)
                b += der[k, 2 * j + 1] * p / math.factorial(2 * j + 1)
                p = p * dt2
            alpha[k][taylor], beta[k][taylor] = a, b

    real = ~taylor & (d2 > 0)
    if np.any(real):
        z1 = (h * sym.lambda1.real)[real]
        z2 = (h * sym.lambda2.real)[real]
        gap = h * np.sqrt(sym.Gamma[real])
        for k in range(kmax + 1):
            f1, f2 = phi(k, z1), phi(k, z2)
            alpha[k][real] = (f1 + f2) / 2
            beta[k][real] = (f2 - f1) / gap
    cplx = ~taylor & (d2 < 0)
    if np.any(cplx):
        z = (h * sym.lambda2)[cplx]
        wv = h * np.sqrt(-sym.Gamma[cplx]) / 2
        for k in range(kmax + 1):
            f = phi(k, z)
            alpha[k][cplx] = f.real
            beta[k][cplx] = f.imag / wv

    return [ModeOperator(alpha[k] + beta[k] * g + 0j, beta[k] * c, alpha[k] - beta[k] * g + 0j)
            for k in range(kmax + 1)]


def dissipation_form(params: PhysParams, xi, h: float, nodes: int = 16):
    """Per-mode Hermitian form M with int_0^h D(e^{tA} z) dt = z^H M z.

    D(u, b) = mu xi1^2 |u|^2 + eta |xi_h|^2 |b|^2.  Returns (M11, M12, M22) with
    M11, M22 real; the integral is evaluated by Gauss-Legendre in t.
    """
    sym = mode_symbol(params, xi)
    w1 = params.mu * sym.xi1**2
    w2 = params.eta * sym.xi_h_sq
    x, w = np.polynomial.legendre.leggauss(nodes)
    m11 = np.zeros(np.shape(sym.S))
    m22 = np.zeros_like(m11)
    m12 = np.zeros_like(m11, dtype=complex)
    for xn, wn in zip(x, w):
        K = phi_operators(params, xi, h * (xn + 1) / 2, kmax=0)[0]
        a = wn * h / 2
        # columns of K are the images of e_u and e_b
        m11 += a * (w1 * np.abs(K.c11) ** 2 + w2 * np.abs(K.c12) ** 2)
        m22 += a * (w1 * np.abs(K.c12) ** 2 + w2 * np.abs(K.c22) ** 2)
        m12 += a * (w1 * np.conj(K.c11) * K.c12 + w2 * np.conj(K.c12) * K.c22)
    return m11, m12, m22


# --- configuration and state -----------------------------------------------


@dataclass
class SolverConfig:
    n1: int = 48
    n2: int = 48
    n3: int = 48
    L: float = 1.0
    mu: float = 1.0
    eta: float = 1.0
    dt: float = 1e-2
    T: float = 50.0
    dealias: float = 2.0 / 3.0
    integrator: str = "ETDRK2"
    output_every: int = 10
    checkpoint_every: int = 0
    nonlinear: bool = True
    blowup_factor: float = 10.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise ValueError(f"T must be at least dt, got T={self.T}, dt={self.dt}")
        if not 0 < self.dealias <= 1:
            raise ValueError(f"dealias fraction must lie in (0, 1], got {self.dealias}")
        if self.integrator not in ("ETDRK2", "IFRK4"):
            raise ValueError(f"integrator must be ETDRK2 or IFRK4, got {self.integrator!r}")
        if self.output_every < 1 or self.checkpoint_every < 0:
            raise ValueError("output_every must be >= 1 and checkpoint_every >= 0")
        PhysParams(self.mu, self.eta)
        SpectralGrid(self.n1, self.n2, self.n3, self.L)

    @property
    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.n1, self.n2, self.n3, self.L)

    @property
    def params(self) -> PhysParams:
        return PhysParams(self.mu, self.eta)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


class NonFiniteError(FloatingPointError):
    pass


class BlowUpError(RuntimeError):
    pass


def _grid_xi(grid: SpectralGrid) -> np.ndarray:
    k1, k2, k3 = np.broadcast_arrays(*grid.k)
    return np.stack([k1, k2, k3], axis=-1)


def nonlinear_terms(u: np.ndarray, b: np.ndarray, grid: SpectralGrid,
                    mask: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(N1_hat, N2_hat) from spectral u_hat, b_hat of shape (3, ...)."""
    if mask is None:
        mask = grid.dealias_mask()
    ur = inverse(u * mask, grid)
    br = inverse(b * mask, grid)
    pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    sym = np.stack([br[i] * br[j] - ur[i] * ur[j] for i, j in pairs])
    anti_pairs = [(0, 1), (0, 2), (1, 2)]
    # W_ij = u_i b_j - b_i u_j, antisymmetric; N2_i = d_j W_ij
    anti = np.stack([ur[i] * br[j] - br[i] * ur[j] for i, j in anti_pairs])
    T = forward(np.concatenate([sym, anti]), grid)
    ik = [1j * k for k in grid.k_odd]
    S = {}
    for n, (i, j) in enumerate(pairs):
        S[i, j] = S[j, i] = T[n]
    W = {}
    for n, (i, j) in enumerate(anti_pairs):
        W[i, j] = T[6 + n]
        W[j, i] = -T[6 + n]
    n1 = np.stack([sum(ik[j] * S[i, j] for j in range(3)) for i in range(3)])
    n2 = np.stack([sum(ik[j] * W[i, j] for j in range(3) if j != i) for i in range(3)])
    n1 = leray_coefficients(n1 * mask, grid)
    n2 = n2 * mask
    n1[:, 0, 0, 0] = 0
    n2[:, 0, 0, 0] = 0
    return n1, n2


def random_initial_data(grid: SpectralGrid, delta: float, seed: int = 0, kmax: float = 4.0) -> FieldPair:
    """Seeded solenoidal band-limited (u0, b0) with ||(u0, b0)||_{H^3} = delta."""
    rng = np.random.default_rng(seed)
    band = (grid.ksq <= kmax**2) & (grid.ksq > 0)
    out = []
    for _ in range(2):
        c = (rng.normal(size=(3,) + grid.spectral_shape) + 1j * rng.normal(size=(3,) + grid.spectral_shape)) * band
        # round trip through real space enforces Hermitian symmetry
        c = forward(inverse(c, grid), grid)
        c = leray_coefficients(c, grid)
        c[:, 0, 0, 0] = 0
        out.append(c)
    p = FieldPair(VectorField(grid, out[0], "spectral"), VectorField(grid, out[1], "spectral"))
    scale = delta / sobolev_norm(p, 3) if delta > 0 else 0.0
    return FieldPair(p.u.replace(out[0] * scale), p.b.replace(out[1] * scale))


# --- stepping ---------------------------------------------------------------


class Stepper:
    """Holds the per-mode operators for one (grid, params, dt, integrator)."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.grid = cfg.grid
        self.params = cfg.params
        self.mask = self.grid.dealias_mask(cfg.dealias)
        xi = _grid_xi(self.grid)
        h = cfg.dt
        if cfg.integrator == "ETDRK2":
            self.K, self.phi1, self.phi2 = phi_operators(self.params, xi, h, kmax=2)
        else:
            self.K = phi_operators(self.params, xi, h, kmax=0)[0]
            self.K_half = phi_operators(self.params, xi, h / 2, kmax=0)[0]
        self.diss = dissipation_form(self.params, xi, h)
        sym = mode_symbol(self.params, xi)
        self.d_weights = (self.params.mu * sym.xi1**2, self.params.eta * sym.xi_h_sq)

    def N(self, u, b):
        if not self.cfg.nonlinear:
            return np.zeros_like(u), np.zeros_like(b)
        return nonlinear_terms(u, b, self.grid, self.mask)

    def linear(self, u, b):
        return self.K.apply(u, b)

    def step(self, u: np.ndarray, b: np.ndarray):
        """One step; returns (u_new, b_new, (Ku, Kb)) with K(dt) applied to the old state."""
        h = self.cfg.dt
        Ku, Kb = self.K.apply(u, b)
        if self.cfg.integrator == "ETDRK2":
            n1, n2 = self.N(u, b)
            p1u, p1b = self.phi1.apply(n1, n2)
            au, ab = Ku + h * p1u, Kb + h * p1b
            m1, m2 = self.N(au, ab)
            p2u, p2b = self.phi2.apply(m1 - n1, m2 - n2)
            un, bn = au + h * p2u, ab + h * p2b
        else:
            E = self.K_half
            k1 = self.N(u, b)
            Eu, Eb = E.apply(u, b)
            t = E.apply(u + h / 2 * k1[0], b + h / 2 * k1[1])
            k2 = self.N(*t)
            k3 = self.N(Eu + h / 2 * k2[0], Eb + h / 2 * k2[1])
            Ek3 = E.apply(*k3)
            k4 = self.N(Ku + h * Ek3[0], Kb + h * Ek3[1])
            Ek1 = self.K.apply(*k1)
            Ek23 = E.apply(k2[0] + k3[0], k2[1] + k3[1])
            un = Ku + h / 6 * (Ek1[0] + 2 * Ek23[0] + k4[0])
            bn = Kb + h / 6 * (Ek1[1] + 2 * Ek23[1] + k4[1])
        un[:, 0, 0, 0] = 0
        bn[:, 0, 0, 0] = 0
        for arr in (un, bn):
            bad = ~np.isfinite(arr)
            if bad.any():
                idx = tuple(int(i) for i in np.argwhere(bad)[0])
                kv = tuple(float(np.broadcast_to(k, self.grid.spectral_shape)[idx[1:]]) for k in self.grid.k)
                raise NonFiniteError(f"non-finite coefficient at component {idx[0]}, mode index {idx[1:]}, xi={kv}")
        return un, bn, (Ku, Kb)

    def energy(self, u, b) -> float:
        return 0.5 * (spectral_sum(1.0, u, self.grid) + spectral_sum(1.0, b, self.grid))

    def dissipation_rate(self, u, b) -> float:
        w1, w2 = self.d_weights
        return spectral_sum(w1, u, self.grid) + spectral_sum(w2, b, self.grid)

    def linear_dissipation(self, u, b) -> float:
        """int_0^dt D(e^{tA} z) dt for the state z = (u, b)."""
        m11, m12, m22 = self.diss
        dens = m11 * np.abs(u) ** 2 + m22 * np.abs(b) ** 2 + 2 * (m12 * np.conj(u) * b).real
        dens = dens.sum(axis=0)
        return float(self.grid.volume * np.sum(self.grid.mode_weight * dens))


# --- trajectories ------------------------------------------------------------


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    states: list[tuple[float, object]] = field(default_factory=list)
    final: FieldPair | None = None
    initial_H3: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([d[name] for d in self.diagnostics])

    def to_csv(self) -> str:
        if not self.diagnostics:
            return ""
        buf = io.StringIO()
        keys = list(self.diagnostics[0])
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for d in self.diagnostics:
            w.writerow([f"{d[k]:.17g}" if isinstance(d[k], float) else d[k] for k in keys])
        return buf.getvalue()


def _diagnostics(st: Stepper, u, b, time: float, step: int) -> dict:
    p = FieldPair(VectorField(st.grid, u, "spectral"), VectorField(st.grid, b, "spectral"), time)
    row = {"step": step, "time": float(time), "energy": st.energy(u, b)}
    row.update(anisotropic_seminorms(p))
    scale_u = max(np.abs(u).max(), 1e-300)
    scale_b = max(np.abs(b).max(), 1e-300)
    row["div_u"] = float(np.abs(divergence_coefficients(u, st.grid)).max() / scale_u) if np.abs(u).max() > 0 else 0.0
    row["div_b"] = float(np.abs(divergence_coefficients(b, st.grid)).max() / scale_b) if np.abs(b).max() > 0 else 0.0
    row["zero_mode"] = float(max(np.abs(u[:, 0, 0, 0]).max(), np.abs(b[:, 0, 0, 0]).max()))
    return row


def run(cfg: SolverConfig, initial: FieldPair, out_dir: str | Path | None = None,
        store_states: bool = False) -> Trajectory:
    """Integrate to ``cfg.T`` and collect diagnostics every ``cfg.output_every`` steps.

    Each diagnostics row carries the energy identity residual over the preceding
    output interval, relative to the initial energy:
      ``energy_residual``     dissipation integrated exactly along the linear
                              subflow plus a trapezoid correction for the
                              nonlinear increment;
      ``trapezoid_residual``  plain trapezoid rule on step dissipation rates.
    """
    st = Stepper(cfg)
    grid = st.grid
    p0 = initial.to_spectral()
    if p0.grid != grid:
        raise ValueError("initial data grid does not match the solver configuration")
    p0.check(1e-10)
    u = p0.u.data * st.mask
    b = p0.b.data * st.mask
    u[:, 0, 0, 0] = 0
    b[:, 0, 0, 0] = 0
    t0 = p0.time
    h3_0 = sobolev_norm(FieldPair(p0.u.replace(u), p0.b.replace(b)), 3)
    e0 = st.energy(u, b)
    traj = Trajectory(initial_H3=h3_0)
    out_dir = Path(out_dir) if out_dir is not None else None

    def record(u, b, time, step, res, trap, diss):
        row = _diagnostics(st, u, b, time, step)
        row["energy_residual"] = res
        row["trapezoid_residual"] = trap
        row["dissipation_integral"] = diss
        traj.times.append(float(time))
        traj.diagnostics.append(row)
        if store_states:
            traj.states.append((float(time), FieldPair(VectorField(grid, u.copy(), "spectral"),
                                                       VectorField(grid, b.copy(), "spectral"), time)))

    record(u, b, t0, 0, 0.0, 0.0, 0.0)
    e_start = e0
    diss_acc = trap_acc = 0.0
    rate = st.dissipation_rate(u, b)
    denom = e0 if e0 > 0 else 1.0
    for n in range(1, cfg.n_steps + 1):
        un, bn, (Ku, Kb) = st.step(u, b)
        rate_new = st.dissipation_rate(un, bn)
        lin = st.linear_dissipation(u, b)
        corr = 0.5 * cfg.dt * (rate_new - st.dissipation_rate(Ku, Kb))
        diss_acc += lin + corr
        trap_acc += 0.5 * cfg.dt * (rate + rate_new)
        u, b, rate = un, bn, rate_new
        time = t0 + n * cfg.dt
        if n % cfg.output_every == 0 or n == cfg.n_steps:
            h3 = sobolev_norm(FieldPair(VectorField(grid, u, "spectral"), VectorField(grid, b, "spectral")), 3)
            if h3 > cfg.blowup_factor * h3_0 and h3_0 > 0:
                raise BlowUpError(f"H^3 norm grew to {h3 / h3_0:.3g} x its initial value at t={time:.6g}")
            e_now = st.energy(u, b)
            res = abs(e_now - e_start + diss_acc) / denom
            trap = abs(e_now - e_start + trap_acc) / denom
            record(u, b, time, n, res, trap, diss_acc)
            e_start, diss_acc, trap_acc = e_now, 0.0, 0.0
        if out_dir is not None and cfg.checkpoint_every and n % cfg.checkpoint_every == 0:
            path = out_dir / f"checkpoint_{n:08d}.bin"
            save_pair(path, FieldPair(VectorField(grid, u, "spectral"), VectorField(grid, b, "spectral"), time))
            traj.states.append((float(time), str(path)))
    traj.final = FieldPair(VectorField(grid, u, "spectral"), VectorField(grid, b, "spectral"), t0 + cfg.n_steps * cfg.dt)
    return traj


def linear_evolution(p: FieldPair, params: PhysParams, t: float) -> FieldPair:
    """Exact kernel evolution e^{tA} applied mode by mode."""
    q = p.to_spectral()
    K = phi_operators(params, _grid_xi(q.grid), t, kmax=0)[0]
    u, b = K.apply(q.u.data, q.b.data)
    return FieldPair(q.u.replace(u), q.b.replace(b), q.time + t)


def pair_distance(p: FieldPair, q: FieldPair) -> float:
    """||(u_p - u_q, b_p - b_q)||_{L^2}."""
    a, c = p.to_spectral(), q.to_spectral()
    return math.sqrt(spectral_sum(1.0, a.u.data - c.u.data, a.grid) + spectral_sum(1.0, a.b.data - c.b.data, a.grid))


def run_metadata(cfg: SolverConfig, seed: int, delta: float, traj: Trajectory, kmax: float = 4.0) -> dict:
    from . import __version__
    return {
        "config": asdict(cfg),
        "initial_data": {"family": "random band-limited solenoidal", "kmax": kmax, "delta": delta, "seed": seed},
        "initial_H3": traj.initial_H3,
        "version": __version__,
    }


def write_run(out_dir: str | Path, cfg: SolverConfig, seed: int, delta: float, traj: Trajectory,
              kmax: float = 4.0) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnostics.csv").write_text(traj.to_csv())
    (out / "run.json").write_text(json.dumps(run_metadata(cfg, seed, delta, traj, kmax), indent=2, sort_keys=True))


@dataclass
class OrderStudy:
    integrator: str
    dts: np.ndarray
    errors: np.ndarray
    slope: float


def convergence_order(integrator: Integrator, dts=(0.1, 0.05, 0.025, 0.0125), T: float = 1.0, n: int = 16,
                      amplitude: float = 3.0, kmax: float = 2.0, seed: int = 0,
                      reference_dt: float = 1.0 / 640) -> OrderStudy:
    """Global L^2 error at T against a fine IFRK4 reference; slope of log error vs log dt."""
    from scipy.stats import linregress

    base = dict(n1=n, n2=n, n3=n, T=T, output_every=10**9)
    p0 = random_initial_data(SolverConfig(**base).grid, amplitude, seed, kmax)
    ref = run(SolverConfig(dt=reference_dt, integrator="IFRK4", **base), p0).final
    dts = np.asarray(dts, dtype=float)
    errors = np.array([pair_distance(run(SolverConfig(dt=h, integrator=integrator, **base), p0).final, ref)
                       for h in dts])
    slope = float(linregress(np.log(dts), np.log(errors)).slope)
    return OrderStudy(integrator, dts, errors, slope)
