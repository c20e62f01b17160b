"""Run configuration: JSON schema, validation, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Invalid or unparsable configuration; carries a field path."""


@dataclass
class ModelConfig:
    g: list[str]
    r: str
    h: float


@dataclass
class GridConfig:
    N: int = 32


@dataclass
class SpectralConfig:
    tol_center: float = 1e-8
    polish: bool = True


@dataclass
class GraphsConfig:
    order: int = 3
    domain_radius: float = 0.05


@dataclass
class IntersectConfig:
    newton_tol: float = 1e-13
    max_iter: int = 50
    stencil_size: int = 50


@dataclass
class VerifyConfig:
    radii: list[float] = field(default_factory=lambda: [1e-2, 3e-3, 1e-3])
    horizon: float = 5.0
    tolerance: float = 1e-7


@dataclass
class SimulateConfig:
    radius: float = 1e-2
    horizon: float = 5.0
    dt: float = 1e-3
    out_dt: float = 0.1


@dataclass
class RunConfig:
    model: ModelConfig
    grid: GridConfig = field(default_factory=GridConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    graphs: GraphsConfig = field(default_factory=GraphsConfig)
    intersect: IntersectConfig = field(default_factory=IntersectConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    seed: int = 0


def _build(cls, block: dict, path: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    fields = cls.__dataclass_fields__
    unknown = set(block) - set(fields)
    if unknown:
        raise ConfigError(f"{path}: unknown fields {sorted(unknown)}")
    try:
        return cls(**block)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    if raw.get("schema") != 1:
        raise ConfigError('top level: missing or unsupported "schema" '
                          '(expected 1)')
    if "model" not in raw:
        raise ConfigError('top level: missing "model" block')
    model_raw = dict(raw["model"]) if isinstance(raw["model"], dict) else None
    if model_raw is None or not {"g", "r", "h"} <= set(model_raw):
        raise ConfigError('model: needs fields "g", "r", "h"')
    cfg = RunConfig(
        model=_build(ModelConfig, raw["model"], "model"),
        grid=_build(GridConfig, raw.get("grid", {}), "grid"),
        spectral=_build(SpectralConfig, raw.get("spectral", {}), "spectral"),
        graphs=_build(GraphsConfig, raw.get("graphs", {}), "graphs"),
        intersect=_build(IntersectConfig, raw.get("intersect", {}),
                         "intersect"),
        verify=_build(VerifyConfig, raw.get("verify", {}), "verify"),
        simulate=_build(SimulateConfig, raw.get("simulate", {}), "simulate"),
        seed=int(raw.get("seed", 0)),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if not isinstance(cfg.model.g, list) or not cfg.model.g:
        raise ConfigError("model.g: expected a nonempty list of expressions")
    if cfg.model.h <= 0:
        raise ConfigError("model.h: must be positive")
    if not 8 <= cfg.grid.N <= 128:
        raise ConfigError(f"grid.N: {cfg.grid.N} outside [8, 128]")
    if not 2 <= cfg.graphs.order <= 5:
        raise ConfigError(f"graphs.order: {cfg.graphs.order} outside [2, 5]")
    for name, val in (("spectral.tol_center", cfg.spectral.tol_center),
                      ("graphs.domain_radius", cfg.graphs.domain_radius),
                      ("intersect.newton_tol", cfg.intersect.newton_tol),
                      ("verify.tolerance", cfg.verify.tolerance),
                      ("verify.horizon", cfg.verify.horizon),
                      ("simulate.dt", cfg.simulate.dt)):
        if val <= 0:
            raise ConfigError(f"{name}: must be positive")
    if cfg.intersect.max_iter < 1:
        raise ConfigError("intersect.max_iter: must be at least 1")
    if any(r <= 0 for r in cfg.verify.radii):
        raise ConfigError("verify.radii: must be positive")
