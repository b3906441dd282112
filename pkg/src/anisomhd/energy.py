"""Time-weighted energy functionals, initial-data norms and Lyapunov cross terms.

All functionals are evaluated from sampled seminorms: sups over the sample
times and time integrals by the trapezoid rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .spectral import (
    FieldPair,
    anisotropic_seminorms,
    derivative,
    inner_product,
    mixed_norm_L2L1,
    sobolev_norm,
    sobolev_weight,
)

EPSILON_MAX = 1.0 / 36.0
DEFAULT_LYAPUNOV_WEIGHT = 0.01

E0_INTEGRALS = ("d1u_H3", "d2u_H2", "gradh_b_H3")
E1_INTEGRALS = ("d1gradh_u_H1", "d2gradh_u_L2", "gradh2_b_H1")


def e2_weights(epsilon: float) -> dict[str, tuple[float, str]]:
    """{term name: (power of (1 + t), seminorm name)} for the E2 sup."""
    return {
        "L2": (1.0, "L2"),
        "gradh_L2": (2.0, "gradh_L2"),
        "d3_L2": (1.0 - 2 * epsilon, "d3_L2"),
        "d1d1_L2": (2.5 - 2 * epsilon, "d1d1_L2"),
        "d1d2_L2": (2.5 - 2 * epsilon, "d1d2_L2"),
        "d2d2_L2": (4.0 / 3.0 - 2 * epsilon, "d2d2_L2"),
        "d2d3_L2": (4.0 / 3.0 - 2 * epsilon, "d2d3_L2"),
        "d1d3_L2": (2.0 - 2 * epsilon, "d1d3_L2"),
        "d3d3_L2": (0.5, "d3d3_L2"),
    }


def _check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon <= EPSILON_MAX:
        raise ValueError(f"epsilon must lie in (0, 1/36], got {epsilon}")


@dataclass
class EnergySeries:
    """E0, E1, E2 as functions of the sample time."""

    times: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    E2: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.E0 + self.E1 + self.E2


@dataclass
class EnergyLedger:
    epsilon: float
    time: float
    E0_sup_term: float
    E0_time_integrals: dict[str, float] = field(default_factory=dict)
    E1_sup_term: float = 0.0
    E1_time_integrals: dict[str, float] = field(default_factory=dict)
    E2_terms: dict[str, float] = field(default_factory=dict)
    E2: float = 0.0

    @property
    def E0(self) -> float:
        return self.E0_sup_term + sum(self.E0_time_integrals.values())

    @property
    def E1(self) -> float:
        return self.E1_sup_term + sum(self.E1_time_integrals.values())

    @property
    def E_total(self) -> float:
        return self.E0 + self.E1 + self.E2

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "time": self.time,
            "E0": self.E0,
            "E0_sup_term": self.E0_sup_term,
            "E0_time_integrals": self.E0_time_integrals,
            "E1": self.E1,
            "E1_sup_term": self.E1_sup_term,
            "E1_time_integrals": self.E1_time_integrals,
            "E2": self.E2,
            "E2_terms": self.E2_terms,
            "E_total": self.E_total,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _columns(source) -> tuple[np.ndarray, Mapping[str, np.ndarray]]:
    """(times, {seminorm: values}) from a Trajectory or a (times, mapping) pair."""
    if hasattr(source, "diagnostics"):
        times = np.asarray(source.times, dtype=float)
        cols = {k: np.array([d[k] for d in source.diagnostics]) for k in source.diagnostics[0]} if source.diagnostics else {}
        return times, cols
    times, cols = source
    return np.asarray(times, dtype=float), {k: np.asarray(v, dtype=float) for k, v in cols.items()}


def _e2_parts(times, cols, epsilon):
    """Per-term weighted squares on the sample, skipping seminorms that are absent."""
    w = 1.0 + times
    return {name: w**power * cols[key] ** 2 for name, (power, key) in e2_weights(epsilon).items() if key in cols}


def energy_series(source, epsilon: float = EPSILON_MAX) -> EnergySeries:
    """E0(t), E1(t), E2(t) at every sample time of a trajectory."""
    _check_epsilon(epsilon)
    times, cols = _columns(source)
    if len(times) < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    w = 1.0 + times
    run_max = np.maximum.accumulate
    E0 = run_max(cols["H3"] ** 2) + sum(cumulative_trapezoid(cols[k] ** 2, times, initial=0) for k in E0_INTEGRALS)
    E1 = run_max(w * cols["gradh_H1"] ** 2) + sum(
        cumulative_trapezoid(w * cols[k] ** 2, times, initial=0) for k in E1_INTEGRALS)
    E2 = run_max(sum(_e2_parts(times, cols, epsilon).values()))
    return EnergySeries(times, E0, E1, E2)


def energy_ledger(source, epsilon: float = EPSILON_MAX) -> EnergyLedger:
    """Every constituent term of E0, E1, E2 at the last sample time."""
    _check_epsilon(epsilon)
    times, cols = _columns(source)
    if len(times) < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    w = 1.0 + times
    integ = lambda y: float(np.trapezoid(y, times)) if hasattr(np, "trapezoid") else float(np.trapz(y, times))
    parts = _e2_parts(times, cols, epsilon)
    return EnergyLedger(
        epsilon=epsilon,
        time=float(times[-1]),
        E0_sup_term=float(np.max(cols["H3"] ** 2)),
        E0_time_integrals={k: integ(cols[k] ** 2) for k in E0_INTEGRALS},
        E1_sup_term=float(np.max(w * cols["gradh_H1"] ** 2)),
        E1_time_integrals={k: integ(w * cols[k] ** 2) for k in E1_INTEGRALS},
        E2_terms={k: float(np.max(v)) for k, v in parts.items()},
        E2=float(np.max(sum(parts.values()))),
    )


def e2_from_linear_series(series, epsilon: float = EPSILON_MAX) -> dict[str, float]:
    """Weighted sups of the E2 terms for a whole-space linear evolution.

    Returns {term: sup_t weight * norm^2} plus the argmax time for each term
    under the key ``"<term>_argmax"``.
    """
    _check_epsilon(epsilon)
    times = np.asarray(series.times, dtype=float)
    parts = _e2_parts(times, series.quantities(), epsilon)
    out: dict[str, float] = {}
    for k, v in parts.items():
        i = int(np.argmax(v))
        out[k] = float(v[i])
        out[f"{k}_argmax"] = float(times[i])
    out["E2"] = float(np.max(sum(parts.values())))
    return out


def seminorm_columns(states, times) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Evaluate every seminorm on a list of FieldPair states."""
    rows = [anisotropic_seminorms(p) for p in states]
    return np.asarray(times, dtype=float), {k: np.array([r[k] for r in rows]) for k in rows[0]}


# --- Lyapunov cross terms ---------------------------------------------------


@dataclass(frozen=True)
class LyapunovTerms:
    d2u_b_H2: float
    d2gradh_u_gradh_b: float
    cauchy_schwarz_bound: float

    def lyapunov(self, H3_sq: float, weight: float = DEFAULT_LYAPUNOV_WEIGHT) -> float:
        """||(u, b)||_{H^3}^2 + weight * (d2 u, b)_{H^2}."""
        return H3_sq + weight * self.d2u_b_H2


def lyapunov_inner_products(p: FieldPair) -> LyapunovTerms:
    """(d2 u, b)_{H^2} and (d2 grad_h u, grad_h b)_{L^2}, computed spectrally."""
    q = p.to_spectral()
    g = q.grid
    d2u = derivative(q.u, 2)
    w2 = sobolev_weight(g, 2)
    first = inner_product(d2u.data, q.b.data, g, w2)
    second = sum(inner_product(derivative(d2u, j).data, derivative(q.b, j).data, g) for j in (1, 2))
    bound = sobolev_norm(d2u, 2) * sobolev_norm(q.b, 2)
    if abs(first) > bound * (1 + 1e-12) + 1e-300:
        raise ArithmeticError(f"Cauchy-Schwarz violated: |{first}| > {bound}")
    return LyapunovTerms(float(first), float(second), float(bound))


# --- initial-data functional --------------------------------------------------


@dataclass(frozen=True)
class InitialDataNorms:
    H3_sq: float
    mixed_sq: float
    mixed_d3_sq: float
    mixed_d33_sq: float

    @property
    def F(self) -> float:
        return self.H3_sq + self.mixed_sq + self.mixed_d3_sq + self.mixed_d33_sq

    def to_json(self) -> dict:
        return {"H3_sq": self.H3_sq, "mixed_sq": self.mixed_sq, "mixed_d3_sq": self.mixed_d3_sq,
                "mixed_d33_sq": self.mixed_d33_sq, "F": self.F}


def initial_data_norms(p0: FieldPair) -> InitialDataNorms:
    """||(u0,b0)||_{H^3}^2 and the L^2_{x3} L^1_{x1x2} norms^2 of (u0,b0), d3(u0,b0), d3^2(u0,b0)."""
    q = p0.to_spectral()

    def d3(p, order):
        return FieldPair(derivative(p.u, 3, order), derivative(p.b, 3, order), p.time)

    return InitialDataNorms(
        H3_sq=sobolev_norm(q, 3) ** 2,
        mixed_sq=mixed_norm_L2L1(q.to_real()) ** 2,
        mixed_d3_sq=mixed_norm_L2L1(d3(q, 1).to_real()) ** 2,
        mixed_d33_sq=mixed_norm_L2L1(d3(q, 2).to_real()) ** 2,
    )
