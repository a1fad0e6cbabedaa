"""Neuron labeling from a small labeled subset, class votes, and evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

UNKNOWN = "unknown"


@dataclass
class LabelMap:
    classes: tuple[str, ...]
    labels: np.ndarray  # class index per neuron, -1 if unlabeled
    mean_asr: np.ndarray  # (n_classes, n_neurons)
    uncovered: list[str] = field(default_factory=list)
    neuron_ids: np.ndarray | None = None

    def tag(self, neuron: int) -> str | None:
        k = int(self.labels[neuron])
        return None if k < 0 else self.classes[k]

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "labels": self.labels.tolist(),
            "uncovered": list(self.uncovered),
        }


def assign_labels(responses: np.ndarray, targets: Sequence[str], classes: Sequence[str], neuron_ids=None) -> LabelMap:
    """Label each neuron with the class that drives its highest mean ASR.

    ``responses`` is (samples, neurons). Silent neurons stay unlabeled; ties
    go to the class listed first.
    """
    responses = np.asarray(responses, dtype=np.float64)
    targets = np.asarray(targets)
    classes = tuple(classes)
    if responses.shape[0] == 0 or targets.size == 0:
        raise ValueError("labeled subset is empty")
    if responses.shape[0] != targets.size:
        raise ValueError("responses and targets differ in length")
    n_neurons = responses.shape[1]
    mean = np.zeros((len(classes), n_neurons))
    uncovered = []
    for k, c in enumerate(classes):
        rows = targets == c
        if not rows.any():
            uncovered.append(c)
            continue
        mean[k] = responses[rows].mean(axis=0)
    labels = np.argmax(mean, axis=0).astype(np.int64)
    labels[mean.max(axis=0) <= 0] = -1
    return LabelMap(classes, labels, mean, uncovered, None if neuron_ids is None else np.asarray(neuron_ids).copy())


def class_scores(asr: np.ndarray, labelmap: LabelMap) -> np.ndarray:
    """Mean ASR of each class's labeled neurons; NaN for classes without neurons."""
    asr = np.asarray(asr, dtype=np.float64)
    if asr.size != labelmap.labels.size:
        raise ValueError("ASR vector does not match the label map")
    scores = np.full(len(labelmap.classes), np.nan)
    for k in range(len(labelmap.classes)):
        members = labelmap.labels == k
        if members.any():
            scores[k] = asr[members].mean()
    return scores


def predict_class(asr: np.ndarray, labelmap: LabelMap) -> str:
    scores = class_scores(asr, labelmap)
    if np.all(np.isnan(scores)):
        return UNKNOWN
    best = int(np.nanargmax(scores))
    if scores[best] <= 0:
        return UNKNOWN
    return labelmap.classes[best]


def overall_accuracy(a1_benign: float, a1_attack: float, a2: float, p_benign: float, p_attack: float) -> float:
    """Cascade accuracy: an attack counts only if detected and then classified correctly."""
    if p_benign < 0 or p_attack < 0:
        raise ValueError("proportions must be non-negative")
    total = p_benign + p_attack
    if total == 0:
        raise ValueError("both proportions are zero")
    pb, pa = p_benign / total, p_attack / total
    return pb * a1_benign + pa * a1_attack * a2


def sparsity(spike_raster=None, neurons: int | None = None, timesteps: int | None = None, total_spikes=None) -> float:
    """Average spikes per neuron per timestep."""
    if total_spikes is None:
        total_spikes = np.asarray(spike_raster).sum()
    if not neurons or not timesteps or neurons <= 0 or timesteps <= 0:
        raise ValueError("neurons and timesteps must be positive")
    return float(total_spikes) / (neurons * timesteps)


def forgetting_matrix(table: Sequence[Sequence[float | None]]) -> list[float]:
    """Per-task forgetting: best earlier accuracy minus final accuracy, floored at 0.

    ``table[t][k]`` is the accuracy on task t after training through task k; entries
    with k < t are ignored and may be None.
    """
    n = len(table)
    scores = []
    for t, row in enumerate(table):
        if len(row) < n:
            raise ValueError(f"row {t} has {len(row)} checkpoints, expected {n}")
        needed = row[t:n]
        if any(x is None for x in needed):
            raise ValueError(f"missing entries for task {t}")
        final = needed[-1]
        earlier = needed[:-1]
        scores.append(max(0.0, max(earlier) - final) if earlier else 0.0)
    return scores


def confusion_matrix(y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    """Square matrix over ``classes`` plus a trailing ``unknown`` row/column."""
    labels = list(classes) + ([UNKNOWN] if UNKNOWN not in classes else [])
    index = {c: i for i, c in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        m[index[t], index.get(p, index[UNKNOWN])] += 1
    return m


def precision_recall(confusion: np.ndarray) -> dict:
    c = np.asarray(confusion, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("confusion matrix must be square")
    tp = np.diag(c)
    predicted = c.sum(axis=0)
    support = c.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
    return {
        "precision": precision,
        "recall": recall,
        "precision_undefined": predicted == 0,
        "recall_undefined": support == 0,
        "support": support.astype(np.int64),
    }


def accuracy(y_true: Sequence[str], y_pred: Sequence[str]) -> float:
    y_true = list(y_true)
    if not y_true:
        return 0.0
    return sum(t == p for t, p in zip(y_true, y_pred)) / len(y_true)
