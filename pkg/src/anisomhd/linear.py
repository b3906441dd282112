"""Per-frequency algebra of the linearized system.

For each frequency xi the linearized, Leray-projected system is the 2x2 ODE

    d/dt (u_hat, b_hat) = A (u_hat, b_hat),   A = [[-mu xi1^2, i xi2], [i xi2, -eta |xi_h|^2]]

acting identically on every vector component.  With S = mu xi1^2 + eta |xi_h|^2 and
P = mu eta xi1^2 |xi_h|^2 + xi2^2 the eigenvalues solve lambda^2 + S lambda + P = 0.

All functions accept numpy arrays and broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .spectral import PhysParams


@dataclass(frozen=True)
class ModeSymbol:
    xi1: np.ndarray
    xi2: np.ndarray
    xi3: np.ndarray
    S: np.ndarray
    P: np.ndarray
    Gamma: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    # (eta |xi_h|^2 - mu xi1^2) / 2, the off-centre diagonal of A - (lambda1+lambda2)/2
    half_gap: np.ndarray
    # |Gamma|^(1/2) and the branch flag, kept separately because Gamma may underflow
    root: np.ndarray
    real: np.ndarray

    @property
    def xi_h_sq(self) -> np.ndarray:
        return self.xi1**2 + self.xi2**2

    def matrix(self, params: PhysParams) -> np.ndarray:
        """The 2x2 generator A(xi), shape (..., 2, 2)."""
        a = np.zeros(np.shape(self.S) + (2, 2), dtype=complex)
        a[..., 0, 0] = -params.mu * self.xi1**2
        a[..., 0, 1] = 1j * self.xi2
        a[..., 1, 0] = 1j * self.xi2
        a[..., 1, 1] = -params.eta * self.xi_h_sq
        return a


def mode_symbol(params: PhysParams, xi) -> ModeSymbol:
    """S, P, Gamma and the eigenvalues lambda1 (faster) and lambda2 at ``xi``.

    ``xi`` is a length-3 sequence (scalars or broadcastable arrays) or an array
    whose last axis has length 3.  lambda2 is formed as P / lambda1 on the real
    branch, which avoids cancellation when P << S^2.
    """
    xi = np.asarray(xi, dtype=float) if not isinstance(xi, (tuple, list)) else xi
    if isinstance(xi, np.ndarray) and xi.ndim >= 1 and xi.shape[-1] == 3:
        x1, x2, x3 = xi[..., 0], xi[..., 1], xi[..., 2]
    else:
        x1, x2, x3 = (np.asarray(c, dtype=float) for c in xi)
    x1, x2, x3 = np.broadcast_arrays(x1, x2, x3)
    mu, eta = params.mu, params.eta
    hsq = x1**2 + x2**2
    S = mu * x1**2 + eta * hsq
    P = mu * eta * x1**2 * hsq + x2**2
    gap = eta * hsq - mu * x1**2
    Gamma = gap**2 - 4 * x2**2

    # |Gamma|^(1/2) from the factors of gap^2 - 4 xi2^2, which do not underflow
    diff = np.abs(gap) - 2 * np.abs(x2)
    real = diff >= 0
    root = np.sqrt(np.abs(diff)) * np.sqrt(np.abs(gap) + 2 * np.abs(x2))
    lam1 = np.where(real, -(S + root) / 2, -S / 2 - 0.5j * root).astype(complex)
    denom = S + root
    safe = np.where(denom > 0, denom, 1.0)
    # P / (S + root) factored so that no product underflows at tiny |xi|
    lam2_real = np.where(denom > 0, -2 * (mu * x1**2 * (eta * hsq / safe) + x2 * (x2 / safe)), 0.0)
    lam2 = np.where(real, lam2_real, -S / 2 + 0.5j * root).astype(complex)
    return ModeSymbol(x1, x2, x3, S, P, Gamma, lam1, lam2, gap / 2, root, real)


def vieta_residuals(sym: ModeSymbol) -> tuple[np.ndarray, np.ndarray]:
    """Relative residuals of lambda1 + lambda2 = -S and lambda1 * lambda2 = P."""
    l1, l2 = sym.lambda1, sym.lambda2
    tiny = np.finfo(float).tiny
    s_scale = np.maximum(np.maximum(sym.S, np.abs(l1)), tiny)
    p_scale = np.maximum(np.maximum(np.abs(sym.P), np.abs(l1) * np.abs(l2)), tiny)
    return np.abs(l1 + l2 + sym.S) / s_scale, np.abs(l1 * l2 - sym.P) / p_scale


@dataclass(frozen=True)
class KernelMatrix:
    G1: np.ndarray
    G2: np.ndarray
    G3: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    Q3: np.ndarray
    t: np.ndarray
    degenerate: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """e^{At} as an array of shape (..., 2, 2)."""
        q1, q2, q3 = np.broadcast_arrays(self.Q1, self.Q2, self.Q3)
        m = np.empty(q1.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = q1
        m[..., 0, 1] = q2
        m[..., 1, 0] = q2
        m[..., 1, 1] = q3
        return m


@dataclass(frozen=True)
class ScaledKernel:
    """Kernel entries divided by exp(Re(lambda2) t), plus log of that scale."""

    log_scale: np.ndarray
    G1: np.ndarray
    avg: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    Q3: np.ndarray
    degenerate: np.ndarray


DEFAULT_DEGENERACY_TOL = 1e-8


def scaled_kernel(sym: ModeSymbol, t, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> ScaledKernel:
    """Kernel entries with the slowest exponential factored out.

    Real branch (Gamma >= 0): e^{lambda1 t} = e^{lambda2 t} e^{-sqrt(Gamma) t} and
    G1 = e^{lambda2 t} (1 - e^{-sqrt(Gamma) t}) / sqrt(Gamma), evaluated with expm1.
    Complex branch: G1 = e^{-S t/2} sin(w t)/w with w = sqrt(-Gamma)/2.
    Within the degeneracy band the limiting form G1 = t e^{lambda t} is used, with
    lambda the mean eigenvalue.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("kernel time must be nonnegative")
    real, root = sym.real, sym.root
    gap = root  # |lambda2 - lambda1|
    degenerate = gap <= degeneracy_tol * np.maximum(1.0, np.abs(sym.lambda1))
    half = root / 2

    # real branch, scale e^{lambda2 t}
    x = root * t
    with np.errstate(invalid="ignore", divide="ignore"):
        g1_real = np.where(x > 0, -np.expm1(-x) / np.where(root > 0, root, 1.0), t)
    e1_real = np.exp(-x)
    g1_real_deg = t * np.exp(-half * t)

    # complex branch, scale e^{-S t / 2}
    w = half
    g1_cplx = t * np.sinc(w * t / np.pi)
    phase = np.exp(1j * w * t)

    G1 = np.where(real, np.where(degenerate, g1_real_deg, g1_real), np.where(degenerate, t, g1_cplx))
    e1 = np.where(real, e1_real + 0j, np.conj(phase))
    e2 = np.where(real, 1.0 + 0j, phase)
    avg = np.where(real, (1.0 + e1_real) / 2, phase.real)
    log_scale = np.where(real, sym.lambda2.real, -sym.S / 2) * t
    Q1 = avg + sym.half_gap * G1
    Q3 = avg - sym.half_gap * G1
    Q2 = 1j * sym.xi2 * G1
    return ScaledKernel(log_scale, G1, avg, e1, e2, Q1 + 0j, Q2, Q3 + 0j, np.broadcast_to(degenerate, np.shape(G1)))


def kernel_matrix(sym: ModeSymbol, t, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> KernelMatrix:
    """G1, G2, G3 and the kernel entries Q1, Q2, Q3 of e^{At} at time ``t``.

    Q1 = eta|xi_h|^2 G1 + G2, Q2 = i xi2 G1, Q3 = -eta|xi_h|^2 G1 + G3, with
    G2 = e^{lambda2 t} + lambda1 G1 and G3 = e^{lambda1 t} - lambda1 G1.  The Q's
    are assembled from the cancellation-free form (e1 + e2)/2 +- half_gap * G1.
    """
    sk = scaled_kernel(sym, t, degeneracy_tol)
    scale = np.exp(sk.log_scale)
    G1 = sk.G1 * scale
    e1 = sk.e1 * scale
    e2 = sk.e2 * scale
    l1 = sym.lambda1
    return KernelMatrix(
        G1=G1 + 0j,
        G2=e2 + l1 * G1,
        G3=e1 - l1 * G1,
        Q1=sk.Q1 * scale,
        Q2=sk.Q2 * scale,
        Q3=sk.Q3 * scale,
        t=np.asarray(t, dtype=float),
        degenerate=sk.degenerate,
    )


def apply_kernel(k: KernelMatrix | ScaledKernel, u_hat, b_hat, scale=1.0):
    """(Q1 u + Q2 b, Q2 u + Q3 b)."""
    return (k.Q1 * u_hat + k.Q2 * b_hat) * scale, (k.Q2 * u_hat + k.Q3 * b_hat) * scale


class Subdomain(str, Enum):
    A1 = "A1"
    A21 = "A21"
    A22 = "A22"
    A23 = "A23"


DEFAULT_RATIO = 10.0


def classify_subdomains(sym: ModeSymbol, r: float = DEFAULT_RATIO) -> np.ndarray:
    """Vectorized subdomain labels (array of str).

    A1 iff 3 S^2 <= 16 P (ties go to A1).  In A2: A21 when 1/r <= |xi1|/|xi2| <= r,
    A22 when |xi1| > r |xi2|, A23 when |xi2| > r |xi1|.
    """
    if not r > 1:
        raise ValueError(f"ratio threshold must exceed 1, got {r}")
    in_a1 = 3 * sym.S**2 <= 16 * sym.P
    a1, a2 = np.abs(sym.xi1), np.abs(sym.xi2)
    labels = np.where(
        in_a1,
        Subdomain.A1.value,
        np.where(a1 > r * a2, Subdomain.A22.value, np.where(a2 > r * a1, Subdomain.A23.value, Subdomain.A21.value)),
    )
    return labels


def classify_subdomain(sym: ModeSymbol, r: float = DEFAULT_RATIO) -> Subdomain:
    return Subdomain(str(np.asarray(classify_subdomains(sym, r)).reshape(-1)[0]))
