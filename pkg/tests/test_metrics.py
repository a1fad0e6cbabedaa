import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsnn.metrics import (
    UNKNOWN,
    LabelMap,
    accuracy,
    assign_labels,
    class_scores,
    confusion_matrix,
    forgetting_matrix,
    overall_accuracy,
    precision_recall,
    predict_class,
    sparsity,
)


def test_assign_labels_rules():
    # neuron 0 answers A only, neuron 1 is silent, neuron 2 ties A and B
    responses = np.array([[0.3, 0.0, 0.1], [0.0, 0.0, 0.1]])
    lm = assign_labels(responses, ["A", "B"], ["A", "B", "C"])
    np.testing.assert_array_equal(lm.labels, [0, -1, 0])
    assert lm.tag(0) == "A" and lm.tag(1) is None
    assert lm.uncovered == ["C"]


def test_assign_labels_errors():
    with pytest.raises(ValueError):
        assign_labels(np.zeros((0, 2)), [], ["A"])
    with pytest.raises(ValueError):
        assign_labels(np.zeros((2, 2)), ["A"], ["A"])


def _lm(labels, classes=("A", "B")):
    labels = np.array(labels)
    return LabelMap(tuple(classes), labels, np.zeros((len(classes), labels.size)))


def test_predict_single_and_group():
    assert predict_class(np.array([0.0, 0.4]), _lm([-1, 1])) == "B"
    assert predict_class(np.array([0.2, 0.2, 0.05]), _lm([0, 0, 1])) == "A"


def test_predict_all_silent_is_unknown():
    assert predict_class(np.zeros(3), _lm([0, 1, 1])) == UNKNOWN
    assert predict_class(np.ones(2), _lm([-1, -1])) == UNKNOWN


def test_class_scores_nan_for_empty_groups():
    s = class_scores(np.array([0.5, 0.1]), _lm([0, 0], ("A", "B")))
    assert s[0] == pytest.approx(0.3) and np.isnan(s[1])


def test_labels_not_anti_informative(rng):
    # each class drives its own neuron block; labeling data must then classify at least at the majority rate
    targets = np.array(["A"] * 30 + ["B"] * 10)
    resp = rng.random((40, 6)) * 0.05
    resp[:30, :3] += 0.3
    resp[30:, 3:] += 0.3
    lm = assign_labels(resp, targets, ["A", "B"])
    acc = accuracy(targets, [predict_class(r, lm) for r in resp])
    assert acc >= 0.75


def test_overall_accuracy_cases():
    assert overall_accuracy(1, 1, 1, 0.3, 0.7) == 1.0
    assert overall_accuracy(0.9, 0.8, 0.0, 0.6, 0.4) == pytest.approx(0.54)


def test_overall_accuracy_reference_point():
    # proportions 72.5 / 28.5 are normalized before weighting
    pb, pa = 0.725 / 1.01, 0.285 / 1.01
    want = pb * 0.943 + pa * 0.943 * 0.663
    got = overall_accuracy(0.943, 0.943, 0.663, 0.725, 0.285)
    assert got == pytest.approx(want, abs=1e-12)
    assert got == pytest.approx(0.8533, abs=1e-4)


def test_overall_accuracy_zero_proportions():
    with pytest.raises(ValueError):
        overall_accuracy(1, 1, 1, 0, 0)


@settings(max_examples=100, deadline=None)
@given(*(st.floats(0, 1) for _ in range(5)), st.floats(0, 0.5))
def test_overall_accuracy_monotone(b, a, c, pb, pa, bump):
    if pb + pa == 0:
        return
    base = overall_accuracy(b, a, c, pb, pa)
    assert overall_accuracy(min(1, b + bump), a, c, pb, pa) >= base - 1e-12
    assert overall_accuracy(b, min(1, a + bump), c, pb, pa) >= base - 1e-12
    assert overall_accuracy(b, a, min(1, c + bump), pb, pa) >= base - 1e-12


def test_sparsity_values():
    assert sparsity(total_spikes=16, neurons=100, timesteps=200) == pytest.approx(0.0008)
    assert sparsity(np.zeros((200, 5)), 5, 200) == 0.0
    assert sparsity(np.ones((200, 5)), 5, 200) == 1.0
    with pytest.raises(ValueError):
        sparsity(total_spikes=3, neurons=0, timesteps=10)


@pytest.mark.parametrize("table,want", [
    ([[0.8, 0.8], [None, 0.5]], [0.0, 0.0]),
    ([[0.9, 0.7], [None, 0.6]], [0.2, 0.0]),
    ([[0.5, 0.9], [None, 0.6]], [0.0, 0.0]),
    ([[0.9, 0.95, 0.3], [None, 0.8, 0.7], [None, None, 0.4]], [0.65, 0.1, 0.0]),
])
def test_forgetting(table, want):
    np.testing.assert_allclose(forgetting_matrix(table), want)


def test_forgetting_missing_entry():
    with pytest.raises(ValueError):
        forgetting_matrix([[0.9, None], [None, 0.5]])


def test_precision_recall_hand_values():
    pr = precision_recall(np.array([[8, 2], [1, 9]]))
    np.testing.assert_allclose(pr["recall"], [0.8, 0.9])
    np.testing.assert_allclose(pr["precision"], [8 / 9, 9 / 11])


def test_precision_recall_identity_and_unpredicted():
    pr = precision_recall(np.eye(3, dtype=int))
    np.testing.assert_array_equal(pr["precision"], 1.0)
    pr = precision_recall(np.array([[0, 2], [0, 3]]))
    assert pr["precision"][0] == 0.0 and pr["precision_undefined"][0]
    with pytest.raises(ValueError):
        precision_recall(np.zeros((2, 3)))


def test_confusion_with_unknown():
    m = confusion_matrix(["A", "B", "B"], ["A", UNKNOWN, "B"], ["A", "B"])
    np.testing.assert_array_equal(m, [[1, 0, 0], [0, 1, 1], [0, 0, 0]])
