import numpy as np
import pytest

from dsnn import hierarchy as H
from dsnn.config import from_dict
from dsnn.data import block_clusters, synth_generate
from dsnn.metrics import LabelMap, UNKNOWN


@pytest.fixture(scope="module")
def tiny_cfg():
    return from_dict({"network": {"phase1_neurons": 10, "batch_size": 8},
                      "growth": {"init_neurons": 2, "max_neurons": 30}})


def patterns(d=40, hot=8):
    a, b = np.zeros(d), np.zeros(d)
    a[:hot] = 1.0
    b[hot:2 * hot] = 1.0
    return a, b


@pytest.fixture(scope="module")
def phase1(tiny_cfg):
    a, b = patterns()
    return H.train_phase1(np.vstack([a, b] * 10), tiny_cfg)


def test_two_clusters_get_distinct_bmus():
    cfg = from_dict({"network": {"phase1_neurons": 20}})
    specs = block_clusters(["p", "q"], 42, counts=60)
    X, y = synth_generate(specs, 0)
    order = np.random.default_rng(0).permutation(len(y))
    model = H.train_phase1(X[order], cfg, keys=order)
    bmus = np.array([np.argmax(H.phase1_activity(model, x, key=1000 + i)[0]) for i, x in enumerate(X)])
    purity = 0
    for n in np.unique(bmus):
        members = y[bmus == n]
        purity += max((members == c).sum() for c in ("p", "q"))
    assert purity / len(y) > 0.9
    assert set(bmus[y == "p"]).isdisjoint(set(bmus[y == "q"]))
    w = model.layer.weights
    assert w.min() >= 0.0 and w.max() <= 1.0


def test_phase1_training_is_deterministic(tiny_cfg):
    a, b = patterns()
    X = np.vstack([a, b] * 3)
    m1, m2 = H.train_phase1(X, tiny_cfg), H.train_phase1(X, tiny_cfg)
    np.testing.assert_array_equal(m1.layer.weights, m2.layer.weights)
    np.testing.assert_array_equal(m1.layer.state.theta, m2.layer.state.theta)


def test_phase1_activity(phase1):
    a, _ = patterns()
    asr0, n0 = H.phase1_activity(phase1, np.zeros(40), key=3)
    assert n0 == 0 and not asr0.any()
    asr1, _ = H.phase1_activity(phase1, a, key=3)
    asr2, _ = H.phase1_activity(phase1, a, key=3)
    np.testing.assert_array_equal(asr1, asr2)
    assert asr1.shape == (10,) and np.all((asr1 >= 0) & (asr1 <= 1))
    with pytest.raises(ValueError):
        H.phase1_activity(phase1, np.zeros(5))


def test_phase2_input_layout():
    x = np.arange(42) / 42
    asr = np.linspace(0.1, 0.2, 100)
    z = H.build_phase2_input(x, asr, 42, 100)
    assert z.size == 142 and z[42] == asr[0]
    np.testing.assert_array_equal(H.build_phase2_input(x, np.zeros(100))[:42], x)
    assert not H.build_phase2_input(x, np.zeros(100))[42:].any()
    with pytest.raises(ValueError):
        H.build_phase2_input(x, asr[:50], 42, 100)


def test_single_pattern_saturates_then_novelty_grows(tiny_cfg, phase1):
    a, b = patterns()
    p2 = H.new_phase2(tiny_cfg, 40, phase1.size)
    sizes = []
    for r in range(12):
        H.train_phase2_task(p2, phase1, np.tile(a, (16, 1)), keys=np.arange(16) + 100 * r, task=0)
        sizes.append(p2.size)
    assert sizes[-1] >= 3
    assert len(set(sizes[-3:])) == 1
    saturated = p2.size
    for r in range(4):
        H.train_phase2_task(p2, phase1, np.tile(b, (16, 1)), keys=np.arange(16) + 100 * r, task=1)
    assert p2.size > saturated
    assert p2.size <= tiny_cfg.growth.max_neurons
    grows = [e for e in p2.events.rows if e[1] == "grow"]
    assert len(grows) == p2.size - 2


def test_phase1_frozen_during_phase2(tiny_cfg, phase1):
    a, b = patterns()
    w, theta = phase1.layer.weights.copy(), phase1.layer.state.theta.copy()
    p2 = H.new_phase2(tiny_cfg, 40, phase1.size)
    H.train_phase2_task(p2, phase1, np.vstack([a, b] * 4), task=0)
    np.testing.assert_array_equal(phase1.layer.weights, w)
    np.testing.assert_array_equal(phase1.layer.state.theta, theta)
    assert p2.layer.n_in == 50


def test_cap_is_respected(phase1):
    cfg = from_dict({"network": {"phase1_neurons": 10, "batch_size": 8},
                     "growth": {"init_neurons": 2, "max_neurons": 4, "a_th": 0.9}})
    a, b = patterns()
    p2 = H.new_phase2(cfg, 40, phase1.size)
    H.train_phase2_task(p2, phase1, np.tile(a, (80, 1)), task=0)
    assert p2.size == 4
    assert max(t[2] for t in p2.trajectory) <= 4


def _labeled_models(cfg, phase1):
    a, b = patterns()
    p2 = H.new_phase2(cfg, 40, phase1.size)
    H.train_phase2_task(p2, phase1, np.tile(a, (32, 1)), task=0)
    X = np.vstack([a, b, np.zeros(40)])
    H.label_phase1(phase1, X, [True, True, False], [0, 1, 2])
    H.label_phase2(p2, phase1, X[:2], ["A", "B"], ["A", "B"], [0, 1])
    return p2


def test_cascade_paths(tiny_cfg, phase1):
    a, _ = patterns()
    p1 = H.PhaseOneModel(phase1.layer.copy(), tiny_cfg)
    p2 = _labeled_models(tiny_cfg, p1)
    benign = H.infer(p1, p2, np.zeros(40), key=9)
    assert benign.verdict == H.BENIGN_TAG and benign.phase2_spikes == 0 and benign.label == H.BENIGN_TAG
    attack = H.infer(p1, p2, a, key=9)
    assert attack.verdict == H.ATTACK_TAG and attack.klass == "A"
    # attack detected but phase-2 labelled groups all silent
    p2.labelmap = LabelMap(("A", "B"), np.full(p2.size, -1), np.zeros((2, p2.size)), neuron_ids=p2.layer.ids)
    assert H.infer(p1, p2, a, key=9).klass == UNKNOWN


def test_cascade_deterministic_across_threads(tiny_cfg, phase1):
    a, b = patterns()
    p1 = H.PhaseOneModel(phase1.layer.copy(), tiny_cfg)
    p2 = _labeled_models(tiny_cfg, p1)
    X = np.vstack([a, b, np.zeros(40), a])
    one = H.infer_many(p1, p2, X, [5, 6, 7, 8], threads=1)
    many = H.infer_many(p1, p2, X, [5, 6, 7, 8], threads=3)
    assert [(p.label, p.phase1_spikes, p.phase2_spikes) for p in one] == [(p.label, p.phase1_spikes, p.phase2_spikes) for p in many]


def test_stale_labels_rejected(tiny_cfg, phase1):
    p1 = H.PhaseOneModel(phase1.layer.copy(), tiny_cfg)
    p2 = _labeled_models(tiny_cfg, p1)
    p2.layer.append_neuron(p2.layer.weights[:, 0].copy())
    with pytest.raises(ValueError, match="stale"):
        H.infer(p1, p2, np.zeros(40))
    with pytest.raises(ValueError, match="unlabeled"):
        H.infer(H.PhaseOneModel(p1.layer, tiny_cfg), p2, np.zeros(40))


def test_checkpoint_round_trip(tmp_path, tiny_cfg, phase1):
    a, b = patterns()
    p1 = H.PhaseOneModel(phase1.layer.copy(), tiny_cfg)
    p2 = _labeled_models(tiny_cfg, p1)
    H.save_checkpoint(tmp_path / "m.npz", p1, p2)
    H.save_checkpoint(tmp_path / "m2.npz", p1, p2)
    assert (tmp_path / "m.npz").read_bytes() == (tmp_path / "m2.npz").read_bytes()
    q1, q2 = H.load_checkpoint(tmp_path / "m.npz")
    np.testing.assert_array_equal(q2.layer.weights, p2.layer.weights)
    np.testing.assert_array_equal(q2.layer.f, p2.layer.f)
    np.testing.assert_array_equal(q1.layer.state.theta, p1.layer.state.theta)
    assert q2.trajectory == p2.trajectory and q2.events.rows == p2.events.rows
    assert q2.growth_rng.random() == p2.growth_rng.random()
    for x in (a, b, np.zeros(40)):
        assert H.infer(q1, q2, x, key=4).label == H.infer(p1, p2, x, key=4).label


@pytest.mark.parametrize("payload", [b"", b"garbage", b"PK\x03\x04broken"])
def test_corrupt_checkpoint(tmp_path, payload):
    (tmp_path / "bad.npz").write_bytes(payload)
    with pytest.raises(ValueError, match="corrupt checkpoint"):
        H.load_checkpoint(tmp_path / "bad.npz")
