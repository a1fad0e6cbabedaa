"""Task-incremental lifelong protocol: dynamic model vs. a static twin."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import hierarchy as H
from .config import ExperimentConfig
from .data import (
    BENIGN,
    DatasetSplit,
    block_clusters,
    make_tasks,
    nearest_centroid_accuracy,
    split_8_1_1,
    subsample_per_class,
    synth_generate,
)
from .metrics import (
    UNKNOWN,
    accuracy,
    confusion_matrix,
    forgetting_matrix,
    overall_accuracy,
    precision_recall,
    predict_class,
    sparsity,
)

log = logging.getLogger(__name__)


@dataclass
class LifelongData:
    X: np.ndarray
    category: np.ndarray  # class tag per row; benign rows carry ``benign``
    split: DatasetSplit
    groupings: list[list[str]]
    benign: str = BENIGN
    excluded: tuple[str, ...] = ()

    @property
    def is_attack(self) -> np.ndarray:
        return self.category != self.benign


def labeled_subset(category: np.ndarray, idx: np.ndarray, classes, fraction: float, seed: int) -> np.ndarray:
    """Seeded ``fraction`` of ``idx`` per class (at least one sample each)."""
    rng = np.random.default_rng(seed)
    picks = []
    for c in classes:
        members = idx[category[idx] == c]
        if members.size == 0:
            continue
        k = max(1, int(round(fraction * members.size)))
        picks.append(np.sort(rng.choice(members, k, replace=False)))
    return np.sort(np.concatenate(picks)) if picks else np.zeros(0, dtype=np.int64)


def train_detector(cfg: ExperimentConfig, data: LifelongData, tasks) -> H.PhaseOneModel:
    """Phase 1 sees benign and attack training traffic of every task, then is labeled and frozen."""
    train = np.concatenate([np.concatenate([t.benign, t.attack]) for t in tasks])
    order = np.random.default_rng(cfg.subseed("order-phase1")).permutation(train)
    p1 = H.train_phase1(data.X[order], cfg, keys=order)
    classes = [data.benign] + [c for g in data.groupings for c in g]
    lab = labeled_subset(data.category, np.sort(train), classes, cfg.network.labeled_fraction, cfg.subseed("labeled"))
    H.label_phase1(p1, data.X[lab], data.is_attack[lab], lab, cfg.threads)
    return p1


def _task_recall(p2, p1, data: LifelongData, idx: np.ndarray, threads: int) -> tuple[float, list[str]]:
    resp = H.phase2_responses(p2, p1, data.X[idx], idx, threads) if idx.size else np.zeros((0, p2.size))
    pred = [predict_class(r, p2.labelmap) for r in resp]
    return accuracy(data.category[idx], pred), pred


def run_variant(cfg: ExperimentConfig, data: LifelongData, p1: H.PhaseOneModel, tasks, test_tasks, name: str) -> dict:
    """Train phase 2 through the task sequence, evaluating every seen task after each one."""
    p2 = H.new_phase2(cfg, data.X.shape[1], p1.size)
    n_tasks = len(tasks)
    table: list[list[float | None]] = [[None] * n_tasks for _ in range(n_tasks)]
    counts_after_task = []
    train_all = np.concatenate([t.attack for t in tasks])
    for t, task in enumerate(tasks):
        order = np.random.default_rng([cfg.subseed("order-phase2"), t]).permutation(task.attack)
        H.train_phase2_task(p2, p1, data.X[order], keys=order, task=t)
        counts_after_task.append(p2.size)
        seen = [c for g in data.groupings[: t + 1] for c in g]
        lab = labeled_subset(data.category, np.sort(train_all), seen, cfg.network.labeled_fraction, cfg.subseed("labeled"))
        H.label_phase2(p2, p1, data.X[lab], seen, data.category[lab], lab, cfg.threads)
        for s in range(t + 1):
            table[s][t], _ = _task_recall(p2, p1, data, test_tasks[s].attack, cfg.threads)
        log.info("%s: task %d done, %d neurons, task accuracies %s", name, t, p2.size, [row[t] for row in table[: t + 1]])

    test_idx = np.sort(np.concatenate([np.concatenate([tt.benign, tt.attack]) for tt in test_tasks]))
    report = evaluate_cascade(cfg, data, p1, p2, test_idx)
    return {
        "name": name,
        "model": p2,
        "accuracy_matrix": table,
        "forgetting": forgetting_matrix(table),
        "neurons_after_task": counts_after_task,
        "trajectory": [list(r) for r in p2.trajectory],
        "events": [list(e) for e in p2.events.rows],
        **report,
    }


def evaluate_cascade(cfg: ExperimentConfig, data: LifelongData, p1: H.PhaseOneModel, p2: H.PhaseTwoModel,
                     test_idx: np.ndarray) -> dict:
    """Full-cascade metrics on ``test_idx``: detection, attack typing, confusion and spike sparsity."""
    test_idx = np.asarray(test_idx)
    preds = H.infer_many(p1, p2, data.X[test_idx], test_idx, cfg.threads)
    y_true = [str(c) for c in data.category[test_idx]]
    y_pred = [data.benign if p.verdict == H.BENIGN_TAG else p.klass for p in preds]
    attack_mask = data.is_attack[test_idx]
    detected = np.array([p.verdict == H.ATTACK_TAG for p in preds], dtype=bool)
    a1_benign = float(np.mean(~detected[~attack_mask])) if (~attack_mask).any() else 0.0
    a1_attack = float(np.mean(detected[attack_mask])) if attack_mask.any() else 0.0
    # attack typing is scored on every true attack, independent of the detector's verdict
    a2, _ = _task_recall(p2, p1, data, test_idx[attack_mask], cfg.threads)
    p_benign = float((~attack_mask).mean()) if test_idx.size else 0.0
    classes = [data.benign] + [c for g in data.groupings for c in g]
    conf = confusion_matrix(y_true, y_pred, classes)
    pr = precision_recall(conf)
    duration = cfg.encoding.duration
    p1_spikes = sum(p.phase1_spikes for p in preds)
    p2_runs = int(detected.sum())
    p2_spikes = sum(p.phase2_spikes for p in preds)
    labels = classes + [UNKNOWN]
    return {
        "a1_benign": a1_benign,
        "a1_attack": a1_attack,
        "a1": float(np.mean(detected == attack_mask)) if test_idx.size else 0.0,
        "a2": a2,
        "overall_estimated": overall_accuracy(a1_benign, a1_attack, a2, p_benign, 1 - p_benign),
        "overall_measured": accuracy(y_true, y_pred),
        "confusion": {"labels": labels, "matrix": conf.tolist()},
        "per_class": {
            c: {"precision": float(pr["precision"][i]), "recall": float(pr["recall"][i]),
                "precision_undefined": bool(pr["precision_undefined"][i]), "support": int(pr["support"][i])}
            for i, c in enumerate(labels)
        },
        "sparsity": {
            "phase1": sparsity(neurons=p1.size, timesteps=duration * len(test_idx), total_spikes=p1_spikes) if test_idx.size else 0.0,
            "phase2": sparsity(neurons=p2.size, timesteps=duration * p2_runs, total_spikes=p2_spikes) if p2_runs else 0.0,
            "phase2_presentations": p2_runs,
            "test_presentations": int(len(test_idx)),
        },
    }


def run_lifelong(cfg: ExperimentConfig, data: LifelongData) -> dict:
    """Shared phase 1, then the dynamic model and its static twin on identical seeds."""
    task_seed = cfg.subseed("tasks")
    tasks = make_tasks(data.category, data.groupings, data.benign, data.excluded, data.split.train, task_seed)
    test_tasks = make_tasks(data.category, data.groupings, data.benign, data.excluded, data.split.test, task_seed)
    p1 = train_detector(cfg, data, tasks)
    dynamic = run_variant(cfg, data, p1, tasks, test_tasks, "dynamic")
    static = run_variant(cfg.static_twin(), data, p1, tasks, test_tasks, "static")
    return {"phase1": p1, "dynamic": dynamic, "static": static, "tasks": [t.spec.classes for t in tasks]}


def synthetic_data(cfg: ExperimentConfig, seed: int) -> tuple[LifelongData, float]:
    """Block-structured Gaussian clusters; returns the data and its nearest-centroid accuracy."""
    s = cfg.synth
    attack_classes = [c for g in s.groupings for c in g]
    names = [BENIGN] + attack_classes
    specs = block_clusters(names, s.n_features, s.hot, s.cold, s.spread, [s.n_benign] + [s.n_per_class] * len(attack_classes))
    X, y = synth_generate(specs, seed)
    oracle = nearest_centroid_accuracy(X, y, {c.label: c.centroid for c in specs})
    split = split_8_1_1(y, seed)
    return LifelongData(X, y, split, [list(g) for g in s.groupings]), oracle


def data_from_cache(cfg: ExperimentConfig, arrays: dict) -> LifelongData:
    """Lifelong view of a preprocessed cache, with optional per-class caps on train and test."""
    d = cfg.data
    category = np.array([str(c) for c in arrays["category"]], dtype=object)
    seed = cfg.subseed("subsample")
    train = subsample_per_class(np.asarray(arrays["train"]), category, d.max_train_per_class, seed)
    test = subsample_per_class(np.asarray(arrays["test"]), category, d.max_eval_per_class, seed + 1)
    split = DatasetSplit(train, np.asarray(arrays["validation"]), test)
    return LifelongData(np.asarray(arrays["X"], dtype=np.float64), category, split,
                        [list(g) for g in d.groupings], d.schema.benign_category, tuple(d.excluded))


def evaluation_indices(data: LifelongData) -> np.ndarray:
    """Test rows that belong to the benign class or to any task."""
    known = {data.benign, *(c for g in data.groupings for c in g)}
    test = data.split.test
    return test[np.array([data.category[i] in known for i in test], dtype=bool)] if test.size else test
