import pytest

from config import (
    DEFAULTS,
    apply_overrides,
    deep_merge,
    dump_resolved,
    load_config,
    read_config_file,
    resolve,
)
from factories import create_responder_model, create_scenario
from models import Behavior, Placement, ValidationMode
from utils import ConfigError
from conftest import make_config, witness_data


def test_defaults_build_a_valid_scenario():
    config = make_config()
    assert config.seed == DEFAULTS["seed"]
    assert config.topology.placement is Placement.GRID
    assert config.protocol.mode is ValidationMode.AGGRESSIVE
    assert config.window_length == 8
    assert config.timing.pack_threshold == 3


def test_overrides_parse_yaml_scalars():
    config = make_config({}, "protocol.mode=defensive", "timing.t_prop=2", "traffic.warm_start=true",
                         "protocol.tolerance=random", "seed=42")
    assert config.protocol.mode is ValidationMode.DEFENSIVE
    assert config.timing.t_prop == 2
    assert config.traffic.warm_start is True
    assert config.protocol.random_tolerance
    assert config.seed == 42


@pytest.mark.parametrize("override", ["protocol.speed=3", "nosuch=1", "topology=3", "protocol.mode.x=1"])
def test_unknown_override_keys_are_rejected(override):
    with pytest.raises(ConfigError):
        resolve({}, [override])


def test_unknown_file_keys_are_rejected():
    with pytest.raises(ConfigError, match="topology.shape"):
        deep_merge(DEFAULTS, {"topology": {"shape": "ring"}})
    with pytest.raises(ConfigError, match="adversaries"):
        resolve({"adversaries": [{"node": 1, "behavior": "black_hole", "colour": "red"}]})


def test_apply_overrides_leaves_input_untouched():
    base = resolve()
    changed = apply_overrides(base, ["timing.duration=50"])
    assert base["timing"]["duration"] == 400
    assert changed["timing"]["duration"] == 50


def test_config_hash_is_stable_and_sensitive():
    a, b = make_config(), make_config()
    assert a.config_hash == b.config_hash
    assert make_config({}, "seed=2").config_hash != a.config_hash


@pytest.mark.parametrize("override, message", [
    ("protocol.tolerance=4", "tolerance"),
    ("protocol.mode=lenient", "protocol.mode"),
    ("protocol.reliability=max", "protocol.reliability"),
    ("traffic.loss_probability=1.5", "loss_probability"),
    ("timing.traffic_interval=4", "traffic_interval"),
    ("topology.cluster_size=1", "cluster_size"),
    ("intrusions.level_weights=[1, 1]", "level_weights"),
    ("seed=-1", "seed"),
    ("topology.radio_range=abc", "radio_range"),
])
def test_invalid_values(override, message):
    with pytest.raises(ConfigError, match=message):
        make_config({}, override)


def test_adversaries_are_validated():
    config = make_config({"adversaries": [{"node": 1, "behavior": "black_hole"}]})
    assert config.adversary_at(1).behavior is Behavior.BLACK_HOLE
    assert config.adversary_at(2) is None
    with pytest.raises(ConfigError, match="outside"):
        make_config({"adversaries": [{"node": 99, "behavior": "black_hole"}]})
    with pytest.raises(ConfigError, match="one behavior"):
        make_config({"adversaries": [{"node": 1, "behavior": "black_hole"},
                                     {"node": 1, "behavior": "gray_hole"}]})
    with pytest.raises(ConfigError, match="adversaries\\[0\\]"):
        make_config({"adversaries": [{"node": 1, "behavior": "gray_hole", "drop_probability": 1.0}]})


@pytest.mark.parametrize("params, message", [
    ({"accuse": [99]}, r"adversaries\[0\]\.accuse entry 99"),
    ({"accuse": 3}, r"adversaries\[0\]\.accuse must be a list"),
    ({"accuse": ["a"]}, r"adversaries\[0\]\.accuse entry"),
    ({"accuse": [1]}, "claimant n1 itself"),
    ({"level": 4}, r"adversaries\[0\]\.level"),
    ({"interval": 0}, r"adversaries\[0\]\.interval"),
])
def test_false_claimant_params_are_validated(params, message):
    adversary = {"node": 1, "behavior": "false_claimant", **params}
    with pytest.raises(ConfigError, match=message):
        make_config({"adversaries": [adversary]})


def test_false_claimant_defaults_pass():
    config = make_config({"adversaries": [{"node": 1, "behavior": "false_claimant", "accuse": [0, 2]}]})
    assert config.adversary_at(1).params["accuse"] == [0, 2]


def test_witness_placement_checks_pool():
    config = make_config(witness_data(witnesses=4, pool=4))
    assert config.topology.cluster_size == 11
    with pytest.raises(ConfigError, match="accused pool"):
        make_config(witness_data(witnesses=4, pool=2, count=3))
    data = witness_data()
    data["topology"]["cluster_size"] = 7
    with pytest.raises(ConfigError, match="accused pool"):
        make_config(data)


def test_create_scenario_keeps_resolved_dict():
    resolved = resolve({}, ["seed=5"])
    assert create_scenario(resolved).raw is resolved


def test_read_and_load_config(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("seed: 9\nprotocol:\n  tolerance: 2\n", encoding="utf-8")
    assert read_config_file(path) == {"seed": 9, "protocol": {"tolerance": 2}}
    config = load_config(path, ["protocol.mode=defensive"])
    assert (config.seed, config.protocol.tolerance) == (9, 2)
    assert "mode: defensive" in dump_resolved(config)
    with pytest.raises(ConfigError, match="not found"):
        read_config_file(tmp_path / "missing.yaml")


def test_bundled_scenarios_load(scenario_dir):
    for path in sorted(scenario_dir.glob("*.yaml")):
        assert load_config(path).config_hash


def test_create_responder_model():
    assert create_responder_model("uniform", 3).n_res == 3
    model = create_responder_model("1/2,1/4,1/4", 2)
    assert model.exact and model.pmfs[0][0] == model.pmfs[1][0]
    with pytest.raises(ConfigError):
        create_responder_model("1/2,1/2,1/2", 2)
    with pytest.raises(ConfigError):
        create_responder_model("a,b,c", 2)
