"""Experiment configuration: TOML files mapped onto dataclasses, unknown keys rejected."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ..errors import ConfigError

KINDS = ("limit_law", "tail_asymptotics", "pickands", "assumptions")
DEFAULT_Z_GRID = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
H_MAX = 0.9 / math.e


@dataclass
class ManifoldSpec:
    kind: str = "circle"
    params: dict = field(default_factory=lambda: {"radius": 1.0})


@dataclass
class ModelSpec:
    family: str = "powered_exponential"
    alpha: float = 2.0
    # D for powered_exponential: scalar (times identity) or square matrix
    D: Any = 1.0
    deformation: dict | None = None
    kernel: str = "epanechnikov"
    halfwidth: float = 1.0


@dataclass
class PickandsSpec:
    alpha: float = 2.0
    r: int = 1
    # rungs as [l, gamma] pairs
    ladder: list = field(default_factory=lambda: [[50, 0.2], [100, 0.1], [200, 0.05]])
    method: str = "dieker-yakir"


@dataclass
class AssumptionSpec:
    h_list: list = field(default_factory=lambda: [1.0, 0.5])
    mesh_spacing: float = 0.5
    deltas: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.5, 10.0])
    beta: float = 1.0
    delta_probe: float = 1.0
    delta0: float = math.e
    radius: float = 0.01
    n_pairs: int = 200
    sweep_per_axis: int = 41


@dataclass
class ExperimentConfig:
    kind: str = "limit_law"
    seed: int = 0
    reps: int = 2000
    out: str = "results"
    gamma: float = 0.25
    h_list: list = field(default_factory=lambda: [0.125, 0.0625, 0.03125, 0.015625])
    z_grid: list = field(default_factory=lambda: list(DEFAULT_Z_GRID))
    x_grid: list = field(default_factory=lambda: [2.5, 3.0, 3.5])
    pickands_h: float | None = None
    max_points: int = 200_000
    manifold: ManifoldSpec = field(default_factory=ManifoldSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    pickands: PickandsSpec = field(default_factory=PickandsSpec)
    assumptions: AssumptionSpec = field(default_factory=AssumptionSpec)

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.reps, int) or self.reps < 100:
            raise ConfigError(f"reps must be an integer >= 100, got {self.reps!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        if not all(math.isfinite(z) for z in self.z_grid) or not self.z_grid:
            raise ConfigError("z_grid must be a non-empty list of finite reals")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.kind == "limit_law":
            hs = self.h_list
            if not hs or any(b >= a for a, b in zip(hs, hs[1:])):
                raise ConfigError("h_list must be strictly decreasing")
            if any(not 0 < h < H_MAX for h in hs):
                raise ConfigError(f"limit_law needs every h in (0, {H_MAX:.4f})")
        if self.kind == "tail_asymptotics" and (not self.x_grid or any(x <= 0 for x in self.x_grid)):
            raise ConfigError("x_grid must hold positive thresholds")
        if self.kind == "pickands" and len(self.pickands.ladder) < 3:
            raise ConfigError("pickands ladder needs at least 3 rungs")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def identity(self) -> dict:
        """Everything that determines the results; the output location does not."""
        d = self.to_dict()
        d.pop("out")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_NESTED = {"manifold": ManifoldSpec, "model": ModelSpec, "pickands": PickandsSpec, "assumptions": AssumptionSpec}


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for k, v in data.items():
        if cls is ExperimentConfig and k in _NESTED:
            if not isinstance(v, dict):
                raise ConfigError(f"[{k}] must be a table")
            v = _build(_NESTED[k], v, f"[{k}]") if k != "manifold" else _manifold(v)
        kwargs[k] = v
    return cls(**kwargs)


def _manifold(data: dict) -> ManifoldSpec:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind is None:
        raise ConfigError("[manifold] needs a kind")
    return ManifoldSpec(kind=kind, params=data)


def config_from_dict(data: dict) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data, "config")
    for name in ("gamma",):
        setattr(cfg, name, float(getattr(cfg, name)))
    cfg.h_list = [float(h) for h in cfg.h_list]
    cfg.z_grid = [float(z) for z in cfg.z_grid]
    cfg.x_grid = [float(x) for x in cfg.x_grid]
    return cfg


def load_config(path: str | Path, kind: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if kind is not None:
        if data.setdefault("kind", kind) != kind:
            raise ConfigError(f"config kind {data['kind']!r} does not match subcommand {kind!r}")
    return config_from_dict(data)
