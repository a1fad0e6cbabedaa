"""Experiment configuration: one YAML file, strict keys, every default materialized."""
from __future__ import annotations

import copy
import dataclasses
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .data import DEFAULT_EXCLUDED, DEFAULT_FEATURES, DEFAULT_GROUPINGS, Schema
from .encoding import DEFAULT_DT, DEFAULT_DURATION, DEFAULT_MAX_RATE, ConfigurationError
from .lif import LifParams
from .plasticity import ADAPTIVE, STANDARD, PlasticityConfig
from .topology import GrowthConfig


class ConfigError(ValueError):
    """Invalid or unknown configuration entries."""


@dataclass
class EncodingConfig:
    max_rate: float = DEFAULT_MAX_RATE
    dt: float = DEFAULT_DT  # seconds
    duration: int = DEFAULT_DURATION

    def __post_init__(self):
        if self.max_rate <= 0 or self.dt <= 0 or self.duration <= 0:
            raise ConfigurationError("max_rate, dt and duration must be positive")
        if self.max_rate * self.dt > 1:
            raise ConfigurationError("max_rate*dt must not exceed 1")

    @property
    def dt_ms(self) -> float:
        return self.dt * 1000.0


@dataclass
class NetworkConfig:
    phase1_neurons: int = 100
    phase1_weight_scale: float = 5.0
    phase2_weight_scale: float = 5.0
    init_scale: float = 0.3
    batch_size: int = 32
    phase1_epochs: int = 1
    phase2_epochs: int = 1
    labeled_fraction: float = 0.1
    phase2_mode: str = ADAPTIVE

    def __post_init__(self):
        if self.phase1_neurons < 2:
            raise ConfigurationError("phase1_neurons must be >= 2")
        if self.batch_size < 1 or self.phase1_epochs < 1 or self.phase2_epochs < 1:
            raise ConfigurationError("batch_size and epochs must be >= 1")
        if not 0 < self.labeled_fraction <= 1:
            raise ConfigurationError("labeled_fraction must lie in (0, 1]")
        if self.phase2_mode not in (ADAPTIVE, STANDARD):
            raise ConfigurationError("phase2_mode must be 'adaptive' or 'standard'")
        if self.init_scale <= 0 or self.init_scale > 1:
            raise ConfigurationError("init_scale must lie in (0, 1]")


@dataclass
class DataConfig:
    csv_paths: list[str] = field(default_factory=list)
    schema: Schema = field(default_factory=Schema)
    feature_list: list[str] | None = field(default_factory=lambda: list(DEFAULT_FEATURES))
    n_select: int = 42
    groupings: list[list[str]] = field(default_factory=lambda: [list(g) for g in DEFAULT_GROUPINGS])
    excluded: list[str] = field(default_factory=lambda: list(DEFAULT_EXCLUDED))
    cache_dir: str = "cache/unsw"
    max_train_per_class: int | None = None
    max_eval_per_class: int | None = None


@dataclass
class SynthConfig:
    n_features: int = 42
    groupings: list[list[str]] = field(default_factory=lambda: [["A", "B"], ["C", "D"]])
    hot: float = 0.9
    cold: float = 0.05
    spread: float = 0.05
    n_benign: int = 400
    n_per_class: int = 150
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])

    def __post_init__(self):
        if not 0 <= self.cold < self.hot <= 1:
            raise ConfigurationError("require 0 <= cold < hot <= 1")
        if self.spread < 0:
            raise ConfigurationError("spread must be non-negative")
        if len(self.groupings) < 2:
            raise ConfigurationError("the synthetic protocol needs at least two tasks")


@dataclass
class ExperimentConfig:
    seed: int = 0
    threads: int = 1
    out: str = "runs/default"
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    lif: LifParams = field(default_factory=LifParams)
    plasticity: PlasticityConfig = field(default_factory=PlasticityConfig)
    growth: GrowthConfig = field(default_factory=GrowthConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    # applied on top of this config to build the static baseline
    static_override: dict = field(
        default_factory=lambda: {"growth": {"enabled": False}, "network": {"phase2_mode": STANDARD}}
    )

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    def static_twin(self) -> "ExperimentConfig":
        merged = _deep_merge(self.to_dict(), self.static_override)
        return from_dict(merged)

    def subseed(self, name: str) -> int:
        return derive_seed(self.seed, name)


def derive_seed(master: int, name: str) -> int:
    """Named sub-seed, stable across runs and platforms."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _build(cls, values: Any, path: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - set(fields))
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in values.items():
        default = fields[name].default_factory() if fields[name].default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(default) and value is not None:
            kwargs[name] = _build(type(default), value, f"{path}.{name}" if path else name)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def from_dict(values: dict | None) -> ExperimentConfig:
    return _build(ExperimentConfig, values or {}, "")


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        values = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return from_dict(values)
