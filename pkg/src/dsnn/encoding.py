"""Min-max scaling and Poisson rate coding of feature vectors."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_MAX_RATE = 63.75  # Hz
DEFAULT_DT = 1e-3  # s
DEFAULT_DURATION = 200  # timesteps


class ConfigurationError(ValueError):
    """Raised for parameter combinations that cannot be simulated."""


@dataclass
class ScalingStats:
    min: np.ndarray
    max: np.ndarray
    features: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=np.float64)
        self.max = np.asarray(self.max, dtype=np.float64)
        if self.min.shape != self.max.shape:
            raise ValueError("min/max shape mismatch")
        if np.any(self.max < self.min):
            raise ValueError("max < min for some feature")
        if not self.features:
            self.features = list(range(self.min.size))
        if len(set(self.features)) != len(self.features):
            raise ValueError("retained feature indices must be distinct")

    @property
    def constant(self) -> np.ndarray:
        return self.max == self.min

    def to_dict(self) -> dict:
        return {
            "min": self.min.tolist(),
            "max": self.max.tolist(),
            "features": [int(i) for i in self.features],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingStats":
        return cls(np.array(d["min"], dtype=np.float64), np.array(d["max"], dtype=np.float64), list(d["features"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ScalingStats":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_scaling(rows) -> ScalingStats:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        raise ValueError("empty dataset")
    if rows.ndim == 1:
        rows = rows[None, :]
    return ScalingStats(rows.min(axis=0), rows.max(axis=0))


def normalize(raw, stats: ScalingStats) -> np.ndarray:
    """Scale a row (or a matrix of rows) into [0, 1]; constant columns map to 0."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape[-1] != stats.min.size:
        raise ValueError(f"dimensionality mismatch: got {raw.shape[-1]}, expected {stats.min.size}")
    span = stats.max - stats.min
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (raw - stats.min) / safe, 0.0)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class SpikeTrain:
    """Binary raster of shape (duration, channels)."""

    raster: np.ndarray

    @property
    def duration(self) -> int:
        return self.raster.shape[0]

    @property
    def channels(self) -> int:
        return self.raster.shape[1]

    @property
    def events(self) -> set[tuple[int, int]]:
        t, c = np.nonzero(self.raster)
        return set(zip(t.tolist(), c.tolist()))

    def count(self) -> int:
        return int(self.raster.sum())


def encode_poisson(
    features: Sequence[float] | np.ndarray,
    max_rate: float = DEFAULT_MAX_RATE,
    duration: int = DEFAULT_DURATION,
    dt: float = DEFAULT_DT,
    rng: np.random.Generator | int | None = None,
) -> SpikeTrain:
    """Bernoulli approximation of a Poisson train: channel i fires each step with p = x_i * max_rate * dt.

    One uniform draw per (step, channel), so for a fixed seed a larger feature value
    yields a superset of the spikes of a smaller one.
    """
    if max_rate * dt > 1.0:
        raise ConfigurationError(f"max_rate*dt = {max_rate * dt:g} exceeds 1")
    if duration <= 0:
        raise ConfigurationError("duration must be positive")
    x = np.asarray(features, dtype=np.float64)
    if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
        raise ValueError("features must be finite and within [0, 1]")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    p = x * (max_rate * dt)
    return SpikeTrain(rng.random((duration, x.size)) < p)
