"""Run configuration: nested dataclass blocks loaded from TOML with overrides.

Precedence is command line > file > defaults.  Unknown sections or keys are
rejected with a ``ConfigError`` naming the offending key.
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FORMAT_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass
class PhysicsBlock:
    mu: float = 1.0
    eta: float = 1.0


@dataclass
class KernelBlock:
    xi_min: int = -4
    xi_max: int = 4
    times: list[float] = field(default_factory=lambda: [0.0, 1.0])
    ratio: float = 10.0


@dataclass
class AuditBlock:
    n_per_subdomain: int = 1000
    radius_min: float = 1e-2
    radius_max: float = 1e2
    n_times: int = 64
    t_min: float = 1e-3
    t_max: float = 50.0
    ratio: float = 10.0
    counterexample: bool = True


@dataclass
class QuadratureBlock:
    extent: float = 8.0
    m: int = 128
    grading: float = 6.0
    m3: int = 0


@dataclass
class PropagateBlock:
    sigma: float = 1.0
    amp_u: list[float] = field(default_factory=lambda: [1.0, 0.0, 0.0])
    amp_b: list[float] = field(default_factory=lambda: [0.0, 1.0, 0.0])
    t_min: float = 1.0
    t_max: float = 1000.0
    n_times: int = 61


@dataclass
class FitBlock:
    input: str = ""
    window_min: float = 10.0
    window_max: float = 1000.0
    shift: float = 1.0


@dataclass
class GridBlock:
    n1: int = 48
    n2: int = 48
    n3: int = 48
    L: float = 1.0


@dataclass
class SolverBlock:
    dt: float = 1e-2
    T: float = 50.0
    dealias: float = 2.0 / 3.0
    integrator: str = "ETDRK2"
    output_every: int = 10
    checkpoint_every: int = 0
    nonlinear: bool = True
    delta: float = 1e-3
    data_kmax: float = 4.0


@dataclass
class EnergyBlock:
    input: str = ""
    epsilon: float = 1.0 / 36.0
    lyapunov_weight: float = 0.01


@dataclass
class InequalityBlock:
    n_samples: int = 1000
    n: int = 32
    kmax: float = 8.0


@dataclass
class RunConfig:
    seed: int = 0
    threads: int = 1
    format_version: int = FORMAT_VERSION
    physics: PhysicsBlock = field(default_factory=PhysicsBlock)
    kernels: KernelBlock = field(default_factory=KernelBlock)
    audit: AuditBlock = field(default_factory=AuditBlock)
    quadrature: QuadratureBlock = field(default_factory=QuadratureBlock)
    propagate: PropagateBlock = field(default_factory=PropagateBlock)
    fit: FitBlock = field(default_factory=FitBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    energy: EnergyBlock = field(default_factory=EnergyBlock)
    inequality: InequalityBlock = field(default_factory=InequalityBlock)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(value: Any, default: Any, key: str) -> Any:
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected a boolean, got {value!r}", key)
    if isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected an integer, got {value!r}", key)
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"{key}: expected a number, got {value!r}", key)
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{key}: expected a string, got {value!r}", key)
    if isinstance(default, list):
        if isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return [float(v) for v in value]
        raise ConfigError(f"{key}: expected a list of numbers, got {value!r}", key)
    raise ConfigError(f"{key}: unsupported value {value!r}", key)


def _apply(target, data: dict, prefix: str = "") -> None:
    names = {f.name: f for f in dataclasses.fields(target)}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if k not in names:
            raise ConfigError(f"unknown configuration key {key!r}", key)
        current = getattr(target, k)
        if dataclasses.is_dataclass(current):
            if not isinstance(v, dict):
                raise ConfigError(f"{key}: expected a section", key)
            _apply(current, v, key + ".")
        else:
            if isinstance(v, dict):
                raise ConfigError(f"{key}: expected a value, got a section", key)
            setattr(target, k, _coerce(v, current, key))


def _parse_override(text: str) -> tuple[list[str], Any]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value", text)
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key.split("."), value


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        _apply(cfg, data)
    for item in overrides or []:
        parts, value = _parse_override(item)
        nested: dict = {}
        cur = nested
        for p in parts[:-1]:
            cur = cur.setdefault(p, {})
        cur[parts[-1]] = value
        _apply(cfg, nested)
    if cfg.format_version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {cfg.format_version}", "format_version")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed}", "seed")
    return cfg


def config_from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    _apply(cfg, data)
    return cfg
