"""Activity-driven growth, aging and pruning of the dynamic excitatory layer."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .layer import ExcitatoryLayer


@dataclass
class GrowthConfig:
    a_th: float = 0.02  # spikes per timestep
    f_th: float = 0.3
    p_th: float = 0.9
    age_max: int = 500  # mini-batches
    max_neurons: int = 200
    init_neurons: int = 10
    noise_sigma: float = 0.01
    enabled: bool = True

    def __post_init__(self):
        if not 0 < self.f_th < 1:
            raise ValueError("f_th must lie in (0, 1)")
        if not 0 < self.p_th < 1:
            raise ValueError("p_th must lie in (0, 1)")
        if not self.p_th > self.f_th:
            raise ValueError("p_th must exceed f_th")
        if self.age_max < 1:
            raise ValueError("age_max must be >= 1")
        if self.init_neurons < 2:
            raise ValueError("init_neurons must be >= 2")
        if self.max_neurons < self.init_neurons:
            raise ValueError("max_neurons must be >= init_neurons")
        if not 0 < self.a_th <= 1:
            raise ValueError("a_th must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def compute_asr(spike_history: np.ndarray, window: int | None = None) -> np.ndarray:
    """Spikes per timestep over the last ``window`` steps of a (time, neurons) raster."""
    spike_history = np.asarray(spike_history)
    if window is None:
        window = spike_history.shape[0]
    if window <= 0:
        raise ValueError("window must be positive")
    if window > spike_history.shape[0]:
        raise ValueError("window longer than the raster")
    return spike_history[-window:].sum(axis=0) / float(window)


def find_bmu_sbmu(asr: np.ndarray) -> tuple[int, int]:
    asr = np.asarray(asr, dtype=np.float64)
    if asr.size < 2:
        raise ValueError("need at least two neurons")
    order = np.argsort(-asr, kind="stable")
    return int(order[0]), int(order[1])


def should_grow(asr_bmu: float, f_bmu: float, cfg: GrowthConfig, live_count: int) -> bool:
    return bool(cfg.enabled and asr_bmu < cfg.a_th and f_bmu < cfg.f_th and live_count < cfg.max_neurons)


def grow_neuron(layer: ExcitatoryLayer, bmu: int, cfg: GrowthConfig, rng: np.random.Generator) -> int:
    """Append a neuron whose incoming weights copy the BMU's plus Gaussian jitter."""
    if layer.size >= cfg.max_neurons:
        raise ValueError("layer already at max_neurons")
    stdp = layer.stdp
    column = layer.weights[:, bmu].copy()
    if cfg.noise_sigma > 0:
        column += rng.normal(0.0, cfg.noise_sigma * (stdp.w_max - stdp.w_min), column.size)
    np.clip(column, stdp.w_min, stdp.w_max, out=column)
    return layer.append_neuron(column)


def prune(layer: ExcitatoryLayer, cfg: GrowthConfig) -> list[int]:
    """Remove old, unspecialized neurons; returns their positional indices (pre-removal)."""
    if not cfg.enabled:
        return []
    offenders = np.flatnonzero((layer.age > cfg.age_max) & (layer.f > cfg.p_th))
    if offenders.size == 0:
        return []
    survivors = layer.size - offenders.size
    if survivors < 2:
        need = 2 - survivors
        # oldest offenders are spared; ties go to the lower index
        spared = offenders[np.lexsort((offenders, -layer.age[offenders]))[:need]]
        offenders = np.setdiff1d(offenders, spared)
    mask = np.ones(layer.size, dtype=bool)
    mask[offenders] = False
    layer.keep(mask)
    return offenders.tolist()


def increment_ages(layer: ExcitatoryLayer) -> np.ndarray:
    layer.age += 1
    return layer.age


@dataclass
class EventLog:
    rows: list[tuple[int, str, int]] = field(default_factory=list)

    def add(self, batch: int, event: str, neuron_id: int) -> None:
        self.rows.append((int(batch), event, int(neuron_id)))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["batch", "event", "neuron_id"])
            w.writerows(self.rows)
