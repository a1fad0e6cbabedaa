import numpy as np
import pytest

from dsnn.experiment import labeled_subset, run_lifelong, synthetic_data


@pytest.fixture(scope="module")
def result():
    from dsnn.config import from_dict
    cfg = from_dict({"network": {"phase1_neurons": 30}, "synth": {"n_benign": 100, "n_per_class": 60}})
    data, oracle = synthetic_data(cfg, 0)
    return cfg, data, oracle, run_lifelong(cfg, data)


def test_oracle_separability(result):
    assert result[2] >= 0.99


def test_accuracy_matrix_complete(result):
    for name in ("dynamic", "static"):
        table = result[3][name]["accuracy_matrix"]
        assert len(table) == 2
        for s, row in enumerate(table):
            assert all((v is None) == (t < s) for t, v in enumerate(row))


def test_static_size_constant(result):
    cfg, *_ , res = result
    counts = {t[2] for t in res["static"]["trajectory"]}
    assert counts == {cfg.growth.init_neurons}
    assert not res["static"]["events"]


def test_trajectory_non_decreasing_between_prunes(result):
    res = result[3]["dynamic"]
    prune_batches = {e[0] for e in res["events"] if e[1] == "prune"}
    traj = res["trajectory"]
    for prev, cur in zip(traj, traj[1:]):
        if cur[0] not in prune_batches:
            assert cur[2] >= prev[2]


def test_benign_costs_no_phase2_spikes(result):
    sp = result[3]["dynamic"]["sparsity"]
    conf = np.array(result[3]["dynamic"]["confusion"]["matrix"])
    labels = result[3]["dynamic"]["confusion"]["labels"]
    benign_verdicts = conf[:, labels.index("Normal")].sum()
    assert sp["phase2_presentations"] == sp["test_presentations"] - benign_verdicts
    assert 0 <= sp["phase1"] < 0.01 and 0 <= sp["phase2"] < 0.01


def test_report_fields(result):
    dyn = result[3]["dynamic"]
    for key in ("a1_benign", "a1_attack", "a2", "overall_estimated", "overall_measured", "per_class", "forgetting"):
        assert key in dyn
    assert set(dyn["per_class"]) == {"Normal", "A", "B", "C", "D", "unknown"}


def test_labeled_subset():
    cat = np.array(["a"] * 50 + ["b"] * 7 + ["c"] * 3)
    idx = labeled_subset(cat, np.arange(60), ["a", "b", "z"], 0.1, 0)
    assert (cat[idx] == "a").sum() == 5 and (cat[idx] == "b").sum() == 1
    assert "c" not in set(cat[idx])
    np.testing.assert_array_equal(idx, labeled_subset(cat, np.arange(60), ["a", "b", "z"], 0.1, 0))
