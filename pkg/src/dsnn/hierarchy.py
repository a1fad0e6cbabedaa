"""Static attack detector (phase 1) feeding a growing attack-type classifier (phase 2).

Randomness: each presentation draws its Poisson input from a generator seeded by
(encoding seed, stream, epoch, sample key), so a sample's spike train does not
depend on evaluation order or thread scheduling.
"""
from __future__ import annotations

import json
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._io import save_npz
from .config import ExperimentConfig, from_dict
from .encoding import encode_poisson
from .layer import ExcitatoryLayer
from .lif import LayerState
from .metrics import UNKNOWN, LabelMap, assign_labels, predict_class
from .plasticity import ADAPTIVE, STANDARD, FiringFactorState, TraceState, record_selection
from .topology import EventLog, GrowthConfig, find_bmu_sbmu, grow_neuron, increment_ages, prune, should_grow

CHECKPOINT_VERSION = 1
BENIGN_TAG = "benign"
ATTACK_TAG = "attack"

# presentation streams
P1_TRAIN, P1_ACT, P2_TRAIN, P2_EVAL = 1, 2, 3, 4


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


@dataclass
class PhaseOneModel:
    layer: ExcitatoryLayer
    cfg: ExperimentConfig
    labelmap: LabelMap | None = None

    @property
    def feature_dim(self) -> int:
        return self.layer.n_in

    @property
    def size(self) -> int:
        return self.layer.size


@dataclass
class PhaseTwoModel:
    layer: ExcitatoryLayer
    cfg: ExperimentConfig
    feature_dim: int
    phase1_size: int
    growth_rng: np.random.Generator
    labelmap: LabelMap | None = None
    events: EventLog = field(default_factory=EventLog)
    trajectory: list[tuple[int, int, int]] = field(default_factory=list)  # (batch, task, neurons)
    batch_index: int = 0
    in_batch: int = 0

    @property
    def growth(self) -> GrowthConfig:
        return self.cfg.growth

    @property
    def size(self) -> int:
        return self.layer.size


@dataclass
class Prediction:
    verdict: str  # "benign" or "attack"
    klass: str | None  # attack type, "unknown", or None for benign
    phase1_asr: np.ndarray
    phase1_spikes: int
    phase2_spikes: int = 0

    @property
    def label(self) -> str:
        return BENIGN_TAG if self.verdict == BENIGN_TAG else self.klass


def _encode(cfg: ExperimentConfig, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    e = cfg.encoding
    return encode_poisson(x, e.max_rate, e.duration, e.dt, rng).raster


def new_phase1(cfg: ExperimentConfig, feature_dim: int) -> PhaseOneModel:
    layer = ExcitatoryLayer.create(
        feature_dim, cfg.network.phase1_neurons, cfg.lif, cfg.plasticity,
        _rng(cfg.subseed("init-phase1")), cfg.network.phase1_weight_scale,
        cfg.network.init_scale, cfg.encoding.dt_ms, STANDARD,
    )
    return PhaseOneModel(layer, cfg)


def train_phase1(
    X: np.ndarray, cfg: ExperimentConfig, keys: Sequence[int] | None = None, epochs: int | None = None,
    model: PhaseOneModel | None = None,
) -> PhaseOneModel:
    """Unsupervised standard-STDP training on an unlabeled stream (in the given order)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty training stream")
    keys = np.arange(X.shape[0]) if keys is None else np.asarray(keys)
    epochs = cfg.network.phase1_epochs if epochs is None else epochs
    model = model or new_phase1(cfg, X.shape[1])
    seed = cfg.subseed("encode")
    for epoch in range(epochs):
        for x, key in zip(X, keys):
            model.layer.present(_encode(cfg, x, _rng(seed, P1_TRAIN, epoch, key)), learn=True)
    return model


def phase1_activity(model: PhaseOneModel, sample: np.ndarray, key: int = 0) -> tuple[np.ndarray, int]:
    """Per-neuron ASR of the frozen detector for one presentation, and its spike total."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size != model.feature_dim:
        raise ValueError(f"sample has {sample.size} features, model expects {model.feature_dim}")
    cfg = model.cfg
    raster = _encode(cfg, sample, _rng(cfg.subseed("encode"), P1_ACT, 0, key))
    res = model.layer.present(raster, learn=False)
    return res.counts / float(cfg.encoding.duration), res.total


def build_phase2_input(features: np.ndarray, asr: np.ndarray, feature_dim: int | None = None, phase1_size: int | None = None) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    asr = np.asarray(asr, dtype=np.float64)
    if feature_dim is not None and features.size != feature_dim:
        raise ValueError(f"expected {feature_dim} features, got {features.size}")
    if phase1_size is not None and asr.size != phase1_size:
        raise ValueError(f"expected {phase1_size} phase-1 rates, got {asr.size}")
    return np.concatenate([features, asr])


def new_phase2(cfg: ExperimentConfig, feature_dim: int, phase1_size: int) -> PhaseTwoModel:
    layer = ExcitatoryLayer.create(
        feature_dim + phase1_size, cfg.growth.init_neurons, cfg.lif, cfg.plasticity,
        _rng(cfg.subseed("init-phase2")), cfg.network.phase2_weight_scale,
        cfg.network.init_scale, cfg.encoding.dt_ms, cfg.network.phase2_mode,
    )
    return PhaseTwoModel(layer, cfg, feature_dim, phase1_size, _rng(cfg.subseed("growth-noise")))


def _close_batch(model: PhaseTwoModel, task: int) -> None:
    layer = model.layer
    increment_ages(layer)
    ids_before = layer.ids.copy()
    removed = prune(layer, model.growth)
    for idx in removed:
        model.events.add(model.batch_index, "prune", ids_before[idx])
    model.trajectory.append((model.batch_index, task, layer.size))
    model.batch_index += 1
    model.in_batch = 0


def train_phase2_task(
    model: PhaseTwoModel, phase1: PhaseOneModel, X: np.ndarray, keys: Sequence[int] | None = None,
    task: int = 0, epochs: int | None = None,
) -> PhaseTwoModel:
    """Ad-STDP training with growth on one task's attack stream (ground-truth routed)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty task stream")
    keys = np.arange(X.shape[0]) if keys is None else np.asarray(keys)
    cfg = model.cfg
    epochs = cfg.network.phase2_epochs if epochs is None else epochs
    seed = cfg.subseed("encode")
    layer, growth = model.layer, model.growth
    duration = float(cfg.encoding.duration)
    for epoch in range(epochs):
        for x, key in zip(X, keys):
            asr1, _ = phase1_activity(phase1, x, key)
            z = build_phase2_input(x, asr1, model.feature_dim, model.phase1_size)
            res = layer.present(_encode(cfg, z, _rng(seed, P2_TRAIN, task * 1000 + epoch, key)), learn=True)
            asr = res.counts / duration
            bmu, sbmu = find_bmu_sbmu(asr)
            if asr[bmu] > 0:
                record_selection(layer.ff, bmu, sbmu, asr[bmu], asr[sbmu])
            if should_grow(asr[bmu], layer.f[bmu], growth, layer.size):
                new_id = grow_neuron(layer, bmu, growth, model.growth_rng)
                model.events.add(model.batch_index, "grow", new_id)
            model.in_batch += 1
            if model.in_batch >= cfg.network.batch_size:
                _close_batch(model, task)
    if model.in_batch:
        _close_batch(model, task)
    return model


def phase2_activity(model: PhaseTwoModel, phase1: PhaseOneModel, sample: np.ndarray, key: int = 0,
                    phase1_asr: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    if phase1_asr is None:
        phase1_asr, _ = phase1_activity(phase1, sample, key)
    z = build_phase2_input(sample, phase1_asr, model.feature_dim, model.phase1_size)
    cfg = model.cfg
    res = model.layer.present(_encode(cfg, z, _rng(cfg.subseed("encode"), P2_EVAL, 0, key)), learn=False)
    return res.counts / float(cfg.encoding.duration), res.total


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def phase1_responses(model: PhaseOneModel, X: np.ndarray, keys: Sequence[int], threads: int = 1) -> np.ndarray:
    rows = _map(lambda i: phase1_activity(model, X[i], keys[i])[0], range(len(keys)), threads)
    return np.array(rows).reshape(len(keys), model.size)


def phase2_responses(model: PhaseTwoModel, phase1: PhaseOneModel, X: np.ndarray, keys: Sequence[int], threads: int = 1) -> np.ndarray:
    rows = _map(lambda i: phase2_activity(model, phase1, X[i], keys[i])[0], range(len(keys)), threads)
    return np.array(rows).reshape(len(keys), model.size)


def label_phase1(model: PhaseOneModel, X: np.ndarray, is_attack: Sequence[bool], keys: Sequence[int], threads: int = 1) -> LabelMap:
    targets = np.where(np.asarray(is_attack, dtype=bool), ATTACK_TAG, BENIGN_TAG)
    model.labelmap = assign_labels(phase1_responses(model, X, keys, threads), targets, (BENIGN_TAG, ATTACK_TAG), model.layer.ids)
    return model.labelmap


def label_phase2(model: PhaseTwoModel, phase1: PhaseOneModel, X: np.ndarray, classes: Sequence[str],
                 targets: Sequence[str], keys: Sequence[int], threads: int = 1) -> LabelMap:
    model.labelmap = assign_labels(phase2_responses(model, phase1, X, keys, threads), targets, classes, model.layer.ids)
    return model.labelmap


def _check_labels(labelmap: LabelMap | None, layer: ExcitatoryLayer, name: str) -> None:
    if labelmap is None:
        raise ValueError(f"{name} is unlabeled")
    if labelmap.labels.size != layer.size or (labelmap.neuron_ids is not None and not np.array_equal(labelmap.neuron_ids, layer.ids)):
        raise ValueError(f"{name} label map is stale (topology changed since labeling)")


def infer(phase1: PhaseOneModel, phase2: PhaseTwoModel, sample: np.ndarray, key: int = 0) -> Prediction:
    """Cascade: phase 2 runs only when phase 1 votes attack. A silent phase 1 counts as benign."""
    _check_labels(phase1.labelmap, phase1.layer, "phase 1")
    _check_labels(phase2.labelmap, phase2.layer, "phase 2")
    asr1, spikes1 = phase1_activity(phase1, sample, key)
    if predict_class(asr1, phase1.labelmap) != ATTACK_TAG:
        return Prediction(BENIGN_TAG, None, asr1, spikes1, 0)
    asr2, spikes2 = phase2_activity(phase2, phase1, sample, key, asr1)
    return Prediction(ATTACK_TAG, predict_class(asr2, phase2.labelmap), asr1, spikes1, spikes2)


def infer_many(phase1: PhaseOneModel, phase2: PhaseTwoModel, X: np.ndarray, keys: Sequence[int], threads: int = 1) -> list[Prediction]:
    return _map(lambda i: infer(phase1, phase2, X[i], keys[i]), range(len(keys)), threads)


# -- checkpoints -------------------------------------------------------------

def _layer_arrays(prefix: str, layer: ExcitatoryLayer) -> dict[str, np.ndarray]:
    return {
        f"{prefix}_weights": layer.weights,
        f"{prefix}_theta": layer.state.theta,
        f"{prefix}_alpha": layer.ff.alpha,
        f"{prefix}_n": layer.ff.n,
        f"{prefix}_exposure": layer.ff.exposure,
        f"{prefix}_age": layer.age,
        f"{prefix}_ids": layer.ids,
    }


def _labelmap_meta(lm: LabelMap | None):
    if lm is None:
        return None
    return {"classes": list(lm.classes), "labels": lm.labels.tolist(), "mean_asr": lm.mean_asr.tolist(),
            "uncovered": list(lm.uncovered), "neuron_ids": None if lm.neuron_ids is None else lm.neuron_ids.tolist()}


def _labelmap_load(d):
    if d is None:
        return None
    ids = None if d["neuron_ids"] is None else np.array(d["neuron_ids"], dtype=np.int64)
    return LabelMap(tuple(d["classes"]), np.array(d["labels"], dtype=np.int64),
                    np.array(d["mean_asr"], dtype=np.float64).reshape(len(d["classes"]), -1), list(d["uncovered"]), ids)


def save_checkpoint(path: str | Path, phase1: PhaseOneModel, phase2: PhaseTwoModel) -> None:
    """Single ``.npz``: arrays for both layers plus a JSON ``meta`` entry."""
    meta = {
        "format": "dsnn-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": phase2.cfg.to_dict(),
        "phase1": {"labelmap": _labelmap_meta(phase1.labelmap), "next_id": phase1.layer.next_id},
        "phase2": {
            "labelmap": _labelmap_meta(phase2.labelmap),
            "next_id": phase2.layer.next_id,
            "feature_dim": phase2.feature_dim,
            "phase1_size": phase2.phase1_size,
            "batch_index": phase2.batch_index,
            "trajectory": [list(t) for t in phase2.trajectory],
            "events": [list(e) for e in phase2.events.rows],
            "growth_rng": phase2.growth_rng.bit_generator.state,
            "mode": phase2.layer.mode,
        },
    }
    arrays = {**_layer_arrays("p1", phase1.layer), **_layer_arrays("p2", phase2.layer)}
    save_npz(path, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def _restore_layer(z, prefix: str, cfg: ExperimentConfig, weight_scale: float, mode: str, next_id: int) -> ExcitatoryLayer:
    w = np.ascontiguousarray(z[f"{prefix}_weights"], dtype=np.float64)
    n_in, n = w.shape
    state = LayerState.at_rest(n, cfg.lif)
    state.theta = np.array(z[f"{prefix}_theta"], dtype=np.float64)
    ff = FiringFactorState(np.array(z[f"{prefix}_alpha"]), cfg.plasticity.tau_ff,
                           np.array(z[f"{prefix}_n"]), np.array(z[f"{prefix}_exposure"]))
    return ExcitatoryLayer(w, state, TraceState.zeros(n_in, n), ff, np.array(z[f"{prefix}_age"]),
                           np.array(z[f"{prefix}_ids"]), cfg.lif, cfg.plasticity, weight_scale,
                           cfg.encoding.dt_ms, next_id, mode)


def load_checkpoint(path: str | Path) -> tuple[PhaseOneModel, PhaseTwoModel]:
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format") != "dsnn-checkpoint" or meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError("unsupported checkpoint format")
            cfg = from_dict(meta["config"])
            m1, m2 = meta["phase1"], meta["phase2"]
            l1 = _restore_layer(z, "p1", cfg, cfg.network.phase1_weight_scale, STANDARD, m1["next_id"])
            l2 = _restore_layer(z, "p2", cfg, cfg.network.phase2_weight_scale, m2["mode"], m2["next_id"])
    except (OSError, EOFError, KeyError, ValueError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt checkpoint {path}: {exc}") from exc
    p1 = PhaseOneModel(l1, cfg, _labelmap_load(m1["labelmap"]))
    rng = np.random.default_rng()
    rng.bit_generator.state = m2["growth_rng"]
    p2 = PhaseTwoModel(l2, cfg, m2["feature_dim"], m2["phase1_size"], rng, _labelmap_load(m2["labelmap"]),
                       EventLog([tuple(e) for e in m2["events"]]), [tuple(t) for t in m2["trajectory"]], m2["batch_index"])
    return p1, p2
