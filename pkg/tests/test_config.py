import pytest
import yaml

from dsnn.config import ConfigError, ExperimentConfig, derive_seed, from_dict, load_config


def test_defaults_materialize(tmp_path):
    cfg = ExperimentConfig()
    cfg.dump(tmp_path / "c.yaml")
    data = yaml.safe_load((tmp_path / "c.yaml").read_text())
    assert data["plasticity"]["A_plus"] == 0.01
    assert data["growth"]["max_neurons"] == 200
    assert load_config(tmp_path / "c.yaml") == cfg


def test_partial_override(tmp_path):
    (tmp_path / "c.yaml").write_text("seed: 7\nlif:\n  theta_plus: 0.2\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.seed == 7 and cfg.lif.theta_plus == 0.2 and cfg.lif.tau_mem == 100.0


@pytest.mark.parametrize("values,match", [
    ({"bogus": 1}, "unknown key"),
    ({"lif": {"tau": 3}}, "unknown key"),
    ({"growth": {"p_th": 0.2, "f_th": 0.3}}, "p_th"),
    ({"encoding": {"max_rate": 5000.0}}, "max_rate"),
    ({"lif": 3}, "mapping"),
])
def test_validation(values, match):
    with pytest.raises(ConfigError, match=match):
        from_dict(values)


def test_missing_and_broken_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.yaml")
    (tmp_path / "b.yaml").write_text("a: [1,\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "b.yaml")


def test_static_twin():
    cfg = from_dict({"growth": {"max_neurons": 50}})
    twin = cfg.static_twin()
    assert not twin.growth.enabled and twin.network.phase2_mode == "standard"
    assert twin.growth.max_neurons == 50 and twin.seed == cfg.seed
    assert cfg.growth.enabled


def test_subseeds_are_stable_and_distinct():
    assert derive_seed(0, "encode") == derive_seed(0, "encode")
    assert len({derive_seed(0, n) for n in ("encode", "split", "init-phase1", "growth-noise")}) == 4
    assert derive_seed(0, "encode") != derive_seed(1, "encode")
