"""Whole-space linear evolution by frequency quadrature, and power-law fitting.

The linear solution is (u_hat, b_hat)(xi, t) = K(xi, t) (u0_hat, b0_hat) with K the
2x2 kernel.  Since K does not depend on xi3, the xi3 sums are folded into
per-(xi1, xi2) weights once, and each time sample costs one 2D kernel
evaluation.  Norms use Plancherel, ||f||^2 = (2 pi)^-3 int |f_hat|^2 dxi.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import erfc

from .linear import kernel_matrix, mode_symbol
from .spectral import FieldPair, PhysParams, SpectralGrid, VectorField, leray_coefficients

MULTI_INDICES = {
    "id": (),
    "d1": (1,),
    "d2": (2,),
    "d3": (3,),
    "d11": (1, 1),
    "d12": (1, 2),
    "d13": (1, 3),
    "d22": (2, 2),
    "d23": (2, 3),
    "d33": (3, 3),
}


def _midpoint(m: int) -> np.ndarray:
    return -1.0 + (np.arange(m) + 0.5) * (2.0 / m)


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor midpoint rule on [-extent, extent]^3.

    ``grading`` > 0 maps the horizontal axes through xi = X sinh(g s)/sinh(g), with
    s uniform, which clusters nodes near xi_h = 0 where the kernel narrows as
    t grows.  Weights on each axis are normalised to sum to 2 * extent.
    """

    extent: float = 8.0
    m: int = 128
    grading: float = 6.0
    m3: int | None = None

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise ValueError(f"points per axis must be even and >= 2, got {self.m}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    def axis(self, graded: bool, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        m = m or self.m
        s = _midpoint(m)
        X = self.extent
        if graded and self.grading > 0:
            g = self.grading
            nodes = X * np.sinh(g * s) / np.sinh(g)
            w = X * g * np.cosh(g * s) / np.sinh(g) * (2.0 / m)
        else:
            nodes = X * s
            w = np.full(m, 2.0 * X / m)
        return nodes, w * (2.0 * X / w.sum())

    def horizontal(self):
        return self.axis(True)

    def vertical(self):
        return self.axis(False, self.m3 or self.m)

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.extent, 2 * self.m, self.grading, None if self.m3 is None else 2 * self.m3)


@dataclass(frozen=True)
class InitialDataSpec:
    """Anisotropic Gaussian profile with constant vector amplitudes.

    u0 = amp_u * g, b0 = amp_b * g with g(x) = exp(-sum x_i^2 / (2 sigma_i^2)),
    Leray-projected in frequency space when ``project`` is set.
    """

    sigma: tuple[float, float, float] = (1.0, 1.0, 1.0)
    amp_u: tuple[float, float, float] = (1.0, 0.0, 0.0)
    amp_b: tuple[float, float, float] = (0.0, 1.0, 0.0)
    scale: float = 1.0
    project: bool = True

    def gaussian_hat(self, x1, x2, x3):
        s1, s2, s3 = self.sigma
        pref = (2 * np.pi) ** 1.5 * s1 * s2 * s3 * self.scale
        return pref * np.exp(-0.5 * ((s1 * x1) ** 2 + (s2 * x2) ** 2 + (s3 * x3) ** 2))

    def vector_hat(self, amp, x1, x2, x3) -> np.ndarray:
        g = self.gaussian_hat(x1, x2, x3)
        a = np.asarray(amp, dtype=float)
        v = np.stack(np.broadcast_arrays(a[0] * g, a[1] * g, a[2] * g))
        if self.project:
            ksq = x1**2 + x2**2 + x3**2
            inv = np.divide(1.0, ksq, out=np.zeros(np.shape(ksq)), where=ksq > 0)
            kv = (x1 * v[0] + x2 * v[1] + x3 * v[2]) * inv
            v = np.stack([v[0] - x1 * kv, v[1] - x2 * kv, v[2] - x3 * kv])
        return v

    def mass_defect(self, extent: float) -> float:
        """Upper bound on the fraction of ||(u0, b0)||^2 outside [-extent, extent]^3."""
        inside = 1.0
        for s in self.sigma:
            inside *= 1.0 - erfc(s * extent)
        return float(1.0 - inside)

    def on_grid(self, grid: SpectralGrid) -> FieldPair:
        """Fourier-series sampling on a periodic box centred on the profile."""
        k1, k2, k3 = grid.k
        vol = grid.volume
        # centre the profile at the box midpoint (pi L): phase e^{-i k pi L}
        phase = np.exp(-1j * np.pi * grid.L * (k1 + k2 + k3))
        pair = []
        for amp in (self.amp_u, self.amp_b):
            v = self.vector_hat(amp, k1, k2, k3) * phase / vol
            if self.project:
                v = leray_coefficients(v, grid)
            v[:, 0, 0, 0] = 0.0
            pair.append(VectorField(grid, v.astype(complex), "spectral"))
        return FieldPair(pair[0], pair[1], 0.0)


class UnresolvedDataError(ValueError):
    pass


@dataclass
class LinearSeries:
    times: np.ndarray
    u: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    def pair_norm(self, *names: str) -> np.ndarray:
        """sqrt(sum over names of ||d^alpha u||^2 + ||d^alpha b||^2)."""
        return np.sqrt(sum(self.u[n] ** 2 + self.b[n] ** 2 for n in names))

    def quantities(self) -> dict[str, np.ndarray]:
        return {
            "L2": self.pair_norm("id"),
            "gradh_L2": self.pair_norm("d1", "d2"),
            "d3_L2": self.pair_norm("d3"),
            "d1gradh_L2": self.pair_norm("d11", "d12"),
            "d2gradh_L2": self.pair_norm("d12", "d22"),
            "d1d1_L2": self.pair_norm("d11"),
            "d1d2_L2": self.pair_norm("d12"),
            "d1d3_L2": self.pair_norm("d13"),
            "d2d2_L2": self.pair_norm("d22"),
            "d2d3_L2": self.pair_norm("d23"),
            "d3d3_L2": self.pair_norm("d33"),
        }

    def to_csv(self) -> str:
        cols = [f"u_{n}" for n in MULTI_INDICES] + [f"b_{n}" for n in MULTI_INDICES]
        lines = [",".join(["t"] + cols)]
        for i, t in enumerate(self.times):
            vals = [self.u[n][i] for n in MULTI_INDICES] + [self.b[n][i] for n in MULTI_INDICES]
            lines.append(",".join(f"{v:.17g}" for v in [t] + vals))
        return "\n".join(lines) + "\n"


def _data_weights(data: InitialDataSpec, grid: QuadratureGrid):
    """Per-(xi1, xi2) sums over xi3 of |xi^alpha|^2 |u0|^2, |b0|^2 and u0 . conj(b0)."""
    x1, w1 = grid.horizontal()
    x2, w2 = grid.horizontal()
    x3, w3 = grid.vertical()
    # integrand is invariant under xi -> -xi: keep xi3 > 0 and double
    pos = x3 > 0
    x3, w3 = x3[pos], 2 * w3[pos]
    X1, X2 = x1[:, None, None], x2[None, :, None]
    out = {key: {n: np.zeros((len(x1), len(x2)), dtype=complex if key == "ub" else float)
                 for n in MULTI_INDICES} for key in ("uu", "bb", "ub")}
    chunk = max(1, 4_000_000 // (len(x1) * len(x2)))
    for start in range(0, len(x3), chunk):
        X3 = x3[None, None, start:start + chunk]
        W3 = w3[start:start + chunk]
        u0 = data.vector_hat(data.amp_u, X1, X2, X3)
        b0 = data.vector_hat(data.amp_b, X1, X2, X3)
        uu = np.sum(np.abs(u0) ** 2, axis=0)
        bb = np.sum(np.abs(b0) ** 2, axis=0)
        ub = np.sum(u0 * np.conj(b0), axis=0)
        comps = (X1, X2, X3)
        for name, axes in MULTI_INDICES.items():
            mult = 1.0
            for a in axes:
                mult = mult * comps[a - 1] ** 2
            for key, val in (("uu", uu), ("bb", bb), ("ub", ub)):
                out[key][name] += np.sum(mult * val * W3, axis=2)
    return x1, w1, x2, w2, out


def propagate_linear(params: PhysParams, data: InitialDataSpec, grid: QuadratureGrid,
                     times: Sequence[float], mass_tol: float = 1e-6) -> LinearSeries:
    """L^2 norms of d^alpha u(t), d^alpha b(t) for the multi-indices in MULTI_INDICES."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted and nonnegative")
    defect = data.mass_defect(grid.extent)
    if defect > mass_tol:
        raise UnresolvedDataError(f"initial data not resolved by the quadrature box: mass defect {defect:.3e}")
    x1, w1, x2, w2, W = _data_weights(data, grid)
    sym = mode_symbol(params, (x1[:, None], x2[None, :], 0.0))
    wh = w1[:, None] * w2[None, :] / (2 * np.pi) ** 3
    u = {n: np.empty(len(times)) for n in MULTI_INDICES}
    b = {n: np.empty(len(times)) for n in MULTI_INDICES}
    for i, t in enumerate(times):
        k = kernel_matrix(sym, t)
        a11, a22, a33 = np.abs(k.Q1) ** 2, np.abs(k.Q2) ** 2, np.abs(k.Q3) ** 2
        c12 = k.Q1 * np.conj(k.Q2)
        c23 = k.Q2 * np.conj(k.Q3)
        for n in MULTI_INDICES:
            uu, bb, ub = W["uu"][n], W["bb"][n], W["ub"][n]
            u2 = a11 * uu + a22 * bb + 2 * (c12 * ub).real
            b2 = a22 * uu + a33 * bb + 2 * (c23 * ub).real
            u[n][i] = np.sqrt(max(np.sum(wh * u2), 0.0))
            b[n][i] = np.sqrt(max(np.sum(wh * b2), 0.0))
    return LinearSeries(times, u, b)


@dataclass
class DecayFit:
    quantity: str
    window: tuple[float, float]
    exponent: float
    intercept: float
    r2: float
    n_points: int
    shift: float = 1.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def fit_decay(times, values, window: tuple[float, float] | None = None, quantity: str = "",
              shift: float = 1.0, min_points: int = 8) -> DecayFit:
    """Least-squares slope of log(value) against log(shift + t) over ``window``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    lo, hi = window
    if lo < t.min() - 1e-12 * abs(t.min()) or hi > t.max() * (1 + 1e-12):
        raise ValueError(f"fit window {window} outside the series range [{t.min()}, {t.max()}]")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < min_points:
        raise ValueError(f"need at least {min_points} points in the fit window, found {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise ValueError("decay fit needs positive values")
    x = np.log(shift + t[sel])
    if not np.all(np.isfinite(x)):
        raise ValueError("log(shift + t) must be finite in the window")
    res = stats.linregress(x, np.log(v[sel]))
    return DecayFit(quantity, (float(lo), float(hi)), float(res.slope), float(res.intercept),
                    float(res.rvalue**2), int(sel.sum()), shift)


def log_times(t_min: float, t_max: float, n: int, include_zero: bool = False) -> np.ndarray:
    t = np.geomspace(t_min, t_max, n)
    return np.concatenate([[0.0], t]) if include_zero else t


def fits_to_json(fits: Sequence[DecayFit]) -> str:
    return json.dumps([f.to_json() for f in fits], indent=2, sort_keys=True)
