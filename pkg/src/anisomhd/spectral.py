"""Discrete periodic fields, FFT transforms and the norms used by the energy functionals.

The box is [0, 2*pi*L)^3 sampled with (n1, n2, n3) points.  Spectral data use the
real-to-complex layout of ``scipy.fft.rfftn``: axes 1 and 2 are full, axis 3 keeps
the non-negative half.  Forward transforms carry the 1/(n1*n2*n3) factor, so a
coefficient is the Fourier-series amplitude and

    ||f||_{L^2}^2 = (2*pi*L)^3 * sum_xi |f_hat(xi)|^2

approximates the continuum integral.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Union

import numpy as np
import scipy.fft

# number of FFT workers; 0 or negative means "all cores"
_WORKERS = 1


def set_threads(n: int) -> None:
    """Set the number of threads used by the FFTs (0 = all available)."""
    global _WORKERS
    _WORKERS = -1 if n <= 0 else int(n)


@dataclass(frozen=True)
class PhysParams:
    """Viscosity ``mu`` and magnetic diffusivity ``eta``."""

    mu: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and self.eta > 0):
            raise ValueError(f"mu and eta must be positive, got mu={self.mu}, eta={self.eta}")


@dataclass(frozen=True)
class SpectralGrid:
    n1: int
    n2: int
    n3: int
    L: float = 1.0

    def __post_init__(self):
        for name in ("n1", "n2", "n3"):
            n = getattr(self, name)
            if int(n) != n or n < 4:
                raise ValueError(f"{name} must be an integer >= 4, got {n}")
            if n % 2:
                raise ValueError(f"{name} must be even, got {n}")
        if not self.L > 0:
            raise ValueError(f"box scale L must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3 // 2 + 1)

    @property
    def npoints(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def volume(self) -> float:
        return (2 * np.pi * self.L) ** 3

    @property
    def cell_volume(self) -> float:
        return self.volume / self.npoints

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(2 * np.pi * self.L / n for n in self.shape)

    def axis_wavenumbers(self, axis: int) -> np.ndarray:
        """Integer wavenumbers along ``axis`` (1, 2 or 3) scaled by 1/L.

        Full axes use the ordering of ``fftfreq`` with the Nyquist entry relabelled
        +n/2, so the set is {-n/2+1, ..., n/2}/L.  Axis 3 is the rfft half axis.
        """
        n = self.shape[axis - 1]
        if axis == 3:
            k = np.arange(n // 2 + 1, dtype=float)
        else:
            k = np.fft.fftfreq(n, 1.0 / n)
            k[n // 2] = n // 2
        return k / self.L

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wavenumber arrays (k1, k2, k3) over the spectral shape."""
        return (
            self.axis_wavenumbers(1)[:, None, None],
            self.axis_wavenumbers(2)[None, :, None],
            self.axis_wavenumbers(3)[None, None, :],
        )

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers used by odd-order operators: Nyquist entries set to zero."""
        out = []
        for axis, ka in enumerate(self.k, start=1):
            ka = ka.copy()
            n = self.shape[axis - 1]
            ka.reshape(-1)[n // 2] = 0.0
            out.append(ka)
        return tuple(out)

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2, k3 = self.k
        return k1**2 + k2**2 + k3**2

    @cached_property
    def mode_weight(self) -> np.ndarray:
        """Multiplicity of each stored rfft mode in a full-spectrum sum."""
        w = np.full(self.n3 // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w[None, None, :], self.spectral_shape)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable physical coordinates x_i = 2*pi*L*j/n_i."""
        h1, h2, h3 = self.spacing
        return (
            (np.arange(self.n1) * h1)[:, None, None],
            (np.arange(self.n2) * h2)[None, :, None],
            (np.arange(self.n3) * h3)[None, None, :],
        )

    def centered_coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinates shifted to [-pi*L, pi*L), for profiles centred in the box."""
        half = np.pi * self.L
        return tuple(x - half for x in self.coordinates())

    def dealias_mask(self, fraction: float = 2.0 / 3.0) -> np.ndarray:
        """Boolean mask keeping modes with every |k_i| <= fraction * Nyquist."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for axis, ka in enumerate(self.k, start=1):
            n = self.shape[axis - 1]
            cutoff = fraction * (n // 2) / self.L
            keep &= np.abs(ka) <= cutoff + 1e-12
        return keep


def make_grid(n1: int, n2: int, n3: int, L: float = 1.0) -> SpectralGrid:
    return SpectralGrid(n1, n2, n3, L)


Representation = Literal["real", "spectral"]


@dataclass(frozen=True)
class ScalarField:
    grid: SpectralGrid
    data: np.ndarray
    representation: Representation = "real"

    ncomp = 0

    def __post_init__(self):
        expected = self.grid.shape if self.representation == "real" else self.grid.spectral_shape
        if self.ncomp:
            expected = (self.ncomp,) + expected
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} does not match {expected}")

    @property
    def is_spectral(self) -> bool:
        return self.representation == "spectral"

    def replace(self, data: np.ndarray, representation: Representation | None = None):
        return dataclasses.replace(
            self, data=data, representation=representation or self.representation
        )


@dataclass(frozen=True)
class VectorField(ScalarField):
    ncomp = 3


Field = Union[ScalarField, VectorField]


def zeros(grid: SpectralGrid, vector: bool = True, representation: Representation = "spectral") -> Field:
    shape = grid.spectral_shape if representation == "spectral" else grid.shape
    dtype = complex if representation == "spectral" else float
    if vector:
        return VectorField(grid, np.zeros((3,) + shape, dtype=dtype), representation)
    return ScalarField(grid, np.zeros(shape, dtype=dtype), representation)


def forward(data: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """rfftn over the last three axes with the 1/N factor."""
    return scipy.fft.rfftn(data, axes=(-3, -2, -1), norm="forward", workers=_WORKERS)


def inverse(data: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    return scipy.fft.irfftn(data, s=grid.shape, axes=(-3, -2, -1), norm="forward", workers=_WORKERS)


def transform(f: Field, direction: Literal["forward", "inverse"]) -> Field:
    """Move a field between real and spectral representation."""
    if direction == "forward":
        if f.is_spectral:
            raise ValueError("forward transform needs a real-space field")
        return f.replace(forward(f.data, f.grid), "spectral")
    if direction == "inverse":
        if not f.is_spectral:
            raise ValueError("inverse transform needs a spectral field")
        return f.replace(inverse(f.data, f.grid), "real")
    raise ValueError(f"unknown direction {direction!r}")


def full_spectrum(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Expand rfft coefficients to the full (n1, n2, n3) spectrum."""
    return scipy.fft.fftn(inverse(coeffs, grid), axes=(-3, -2, -1), norm="forward")


def derivative_multiplier(grid: SpectralGrid, axis: int, order: int) -> np.ndarray:
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    if order < 1:
        raise ValueError(f"derivative order must be positive, got {order}")
    ka = grid.k_odd[axis - 1] if order % 2 else grid.k[axis - 1]
    return (1j * ka) ** order


def derivative(f: Field, axis: int, order: int = 1) -> Field:
    """Spectral derivative d^order / dx_axis^order; odd orders drop the Nyquist mode."""
    if not f.is_spectral:
        raise ValueError("derivative needs a spectral field")
    return f.replace(f.data * derivative_multiplier(f.grid, axis, order))


def leray_coefficients(v: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    k1, k2, k3 = grid.k_odd
    ksq = k1**2 + k2**2 + k3**2
    inv = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    kdotv = (k1 * v[0] + k2 * v[1] + k3 * v[2]) * inv
    return np.stack([v[0] - k1 * kdotv, v[1] - k2 * kdotv, v[2] - k3 * kdotv])


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields, I - xi xi^T/|xi|^2.

    Uses the odd-operator wavenumbers so that the projection is consistent with
    the discrete divergence and preserves Hermitian symmetry on Nyquist planes.
    """
    if not v.is_spectral:
        raise ValueError("leray_project needs a spectral field")
    return v.replace(leray_coefficients(v.data, v.grid))


def divergence_coefficients(v: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    k1, k2, k3 = grid.k_odd
    return 1j * (k1 * v[0] + k2 * v[1] + k3 * v[2])


@dataclass(frozen=True)
class FieldPair:
    """Perturbation state (u, b) about the background field e_2."""

    u: VectorField
    b: VectorField
    time: float = 0.0

    def __post_init__(self):
        if self.u.representation != self.b.representation:
            raise ValueError("u and b must share a representation")
        if self.time < 0:
            raise ValueError("time must be nonnegative")

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    @property
    def is_spectral(self) -> bool:
        return self.u.is_spectral

    def to_spectral(self) -> "FieldPair":
        if self.is_spectral:
            return self
        return FieldPair(transform(self.u, "forward"), transform(self.b, "forward"), self.time)

    def to_real(self) -> "FieldPair":
        if not self.is_spectral:
            return self
        return FieldPair(transform(self.u, "inverse"), transform(self.b, "inverse"), self.time)

    def divergence_residual(self) -> float:
        """max_xi |xi . f_hat| / max |f_hat| over u and b (0 for the zero field)."""
        p = self.to_spectral()
        worst = 0.0
        for f in (p.u.data, p.b.data):
            amp = np.abs(f).max()
            if amp > 0:
                div = np.abs(divergence_coefficients(f, p.grid)).max()
                worst = max(worst, div / amp)
        return worst

    def check(self, tol: float = 1e-12) -> None:
        p = self.to_spectral()
        res = p.divergence_residual()
        if res > tol:
            raise ValueError(f"state is not divergence free: residual {res:.3e} > {tol:.1e}")
        scale = max(np.abs(p.u.data).max(), np.abs(p.b.data).max(), 1e-300)
        mean = max(abs(p.u.data[:, 0, 0, 0]).max(), abs(p.b.data[:, 0, 0, 0]).max())
        if mean > tol * scale:
            raise ValueError(f"state has nonzero mean {mean:.3e}")


def spectral_sum(weight: np.ndarray | float, coeffs: np.ndarray, grid: SpectralGrid) -> float:
    """(2 pi L)^3 * sum over the full spectrum of weight * |coeffs|^2.

    ``coeffs`` may carry leading component axes, which are summed.
    """
    power = np.abs(coeffs) ** 2
    if power.ndim > 3:
        power = power.reshape((-1,) + power.shape[-3:]).sum(axis=0)
    return float(grid.volume * np.sum(grid.mode_weight * weight * power))


def inner_product(f: np.ndarray, g: np.ndarray, grid: SpectralGrid, weight=1.0) -> float:
    """Real L^2-type inner product (f, g) computed from spectral coefficients."""
    prod = (f * np.conj(g)).real
    if prod.ndim > 3:
        prod = prod.reshape((-1,) + prod.shape[-3:]).sum(axis=0)
    return float(grid.volume * np.sum(grid.mode_weight * weight * prod))


def sobolev_weight(grid: SpectralGrid, s: int, variant: str = "full") -> np.ndarray | float:
    if s == 0:
        return 1.0
    if variant == "full":
        return (1.0 + grid.ksq) ** s
    if variant == "homogeneous":
        return grid.ksq**s
    raise ValueError(f"unknown Sobolev variant {variant!r}")


def sobolev_norm(p: FieldPair | Field, s: int = 0, variant: str = "full") -> float:
    """H^s norm of (u, b) (or of a single field): (sum (1+|xi|^2)^s |f_hat|^2 vol)^(1/2)."""
    if s not in (0, 1, 2, 3):
        raise ValueError(f"Sobolev index must be in 0..3, got {s}")
    w = None
    if isinstance(p, FieldPair):
        q = p.to_spectral()
        w = sobolev_weight(q.grid, s, variant)
        total = spectral_sum(w, q.u.data, q.grid) + spectral_sum(w, q.b.data, q.grid)
    else:
        f = p if p.is_spectral else transform(p, "forward")
        w = sobolev_weight(f.grid, s, variant)
        total = spectral_sum(w, f.data, f.grid)
    return float(np.sqrt(total))


def l2_norm_real(data: np.ndarray, grid: SpectralGrid) -> float:
    """Direct real-space L^2 norm with cell-volume weights."""
    return float(np.sqrt(grid.cell_volume * np.sum(np.abs(data) ** 2)))


def mixed_norm_L2L1(f: Field | FieldPair | np.ndarray, grid: SpectralGrid | None = None) -> float:
    """||f||_{L^2_{x3} L^1_{x1 x2}} by nested cell-volume quadrature.

    Vector-valued inputs use the pointwise Euclidean norm over all components.
    """
    if isinstance(f, FieldPair):
        p = f.to_real()
        grid = p.grid
        data = np.concatenate([p.u.data, p.b.data])
    elif isinstance(f, ScalarField):
        if f.is_spectral:
            raise ValueError("mixed_norm_L2L1 needs a real-space field")
        grid = f.grid
        data = f.data
    else:
        if grid is None:
            raise ValueError("grid required for a raw array")
        data = np.asarray(f)
    if data.ndim == 4:
        mag = np.sqrt(np.sum(np.abs(data) ** 2, axis=0))
    else:
        mag = np.abs(data)
    h1, h2, h3 = grid.spacing
    plane = mag.sum(axis=(0, 1)) * h1 * h2
    return float(np.sqrt(np.sum(plane**2) * h3))


SEMINORM_NAMES = (
    # E0
    "H3", "d1u_H3", "d2u_H2", "gradh_b_H3",
    # E1
    "gradh_H1", "d1gradh_u_H1", "d2gradh_u_L2", "gradh2_b_H1",
    # E2
    "L2", "gradh_L2", "d3_L2", "d1d1_L2", "d1d2_L2", "d2d2_L2", "d2d3_L2", "d1d3_L2", "d3d3_L2",
)


def anisotropic_seminorms(p: FieldPair) -> dict[str, float]:
    """Every directional norm appearing in the energy functionals E0, E1, E2.

    Names ending in a Sobolev tag apply to the indicated field (``d1u_H3`` is
    ||d_1 u||_{H^3}); names without a field letter apply to the pair (u, b).
    """
    q = p.to_spectral()
    u, b = q.u, q.b
    d = derivative

    def pair(*axes):
        uu, bb = u, b
        for a in axes:
            uu, bb = d(uu, a), d(bb, a)
        return FieldPair(uu, bb, q.time)

    def hnorm(f, s):
        return sobolev_norm(f, s)

    def gradh(f, s):
        # ||grad_h f||_{H^s}^2 = ||d1 f||^2 + ||d2 f||^2
        return float(np.hypot(hnorm(d(f, 1), s), hnorm(d(f, 2), s)))

    out = {
        "H3": sobolev_norm(q, 3),
        "d1u_H3": hnorm(d(u, 1), 3),
        "d2u_H2": hnorm(d(u, 2), 2),
        "gradh_b_H3": gradh(b, 3),
        "gradh_H1": float(np.hypot(sobolev_norm(pair(1), 1), sobolev_norm(pair(2), 1))),
        "d1gradh_u_H1": gradh(d(u, 1), 1),
        "d2gradh_u_L2": gradh(d(u, 2), 0),
        "gradh2_b_H1": float(np.sqrt(sum(hnorm(d(d(b, i), j), 1) ** 2 for i in (1, 2) for j in (1, 2)))),
        "L2": sobolev_norm(q, 0),
        "gradh_L2": float(np.hypot(sobolev_norm(pair(1)), sobolev_norm(pair(2)))),
        "d3_L2": sobolev_norm(pair(3)),
        "d1d1_L2": sobolev_norm(pair(1, 1)),
        "d1d2_L2": sobolev_norm(pair(1, 2)),
        "d2d2_L2": sobolev_norm(pair(2, 2)),
        "d2d3_L2": sobolev_norm(pair(2, 3)),
        "d1d3_L2": sobolev_norm(pair(1, 3)),
        "d3d3_L2": sobolev_norm(pair(3, 3)),
    }
    return out
