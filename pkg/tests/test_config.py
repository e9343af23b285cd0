import json

import pytest

from fedcl.config import (
    ExperimentConfig,
    apply_overrides,
    build_experiment_config,
    config_to_dict,
    load_config_file,
    validate_config,
)
from fedcl.errors import ConfigError


DESK_TOML = """
mode = "central_cl"

[model]
depth = 3
width = 16
in_dim = 8
n_classes = 4

[fed]
n_clients = 2
rounds = 2
local_epochs = 2

[train]
seed = 7
lr = 0.001

[data]
source = "synthetic"

[data.synthetic]
n_events = 2
train_per_class = 10
valid_per_class = 4
test_per_class = 4
dim = 8
n_classes = 4
"""


def write_toml(tmp_path, text=DESK_TOML, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_and_build_toml(tmp_path):
    cfg = build_experiment_config(load_config_file(write_toml(tmp_path)))
    assert cfg.mode == "central_cl"
    assert cfg.model.depth == 3
    assert cfg.train.seed == 7
    assert cfg.data.synthetic.n_events == 2
    validate_config(cfg)


def test_defaults_are_a_valid_desk_profile():
    cfg = build_experiment_config({})
    validate_config(cfg)
    assert cfg.data.source == "synthetic"
    assert cfg.train.batch_size == 32


def test_unknown_key_is_named(tmp_path):
    path = write_toml(tmp_path, DESK_TOML + "\n[trian]\nseed = 3\n")
    with pytest.raises(ConfigError, match="trian"):
        build_experiment_config(load_config_file(path))


def test_unknown_nested_key_is_named(tmp_path):
    path = write_toml(tmp_path, DESK_TOML.replace("lr = 0.001", "lr = 0.001\nmomentum = 0.9"))
    with pytest.raises(ConfigError, match="train.momentum"):
        build_experiment_config(load_config_file(path))


def test_overrides_change_values(tmp_path):
    raw = load_config_file(write_toml(tmp_path))
    cfg = build_experiment_config(raw, ["fed.n_clients=5", "train.lr=0.01", "mode=fed_only"])
    assert cfg.fed.n_clients == 5
    assert cfg.train.lr == 0.01
    assert cfg.mode == "fed_only"


def test_override_unknown_key_fails():
    with pytest.raises(ConfigError, match="fed.clients"):
        build_experiment_config({}, ["fed.clients=5"])


def test_override_requires_key_value_form():
    with pytest.raises(ConfigError, match="key=value"):
        build_experiment_config({}, ["fed.n_clients"])


def test_type_mismatch_is_reported():
    with pytest.raises(ConfigError, match="fed.n_clients"):
        build_experiment_config({"fed": {"n_clients": "three"}})
    with pytest.raises(ConfigError, match="train.lr"):
        build_experiment_config({"train": {"lr": "fast"}})


def test_mode_is_validated():
    with pytest.raises(ConfigError, match="mode"):
        build_experiment_config({"mode": "centralised"})


def test_files_source_requires_existing_files(tmp_path):
    cfg = build_experiment_config(
        {"data": {"source": "files", "files": [{"train": "a.csv", "valid": "b.csv", "test": "c.csv"}]}}
    )
    with pytest.raises(ConfigError, match="a.csv"):
        validate_config(cfg)


def test_synthetic_dims_must_match_model():
    cfg = build_experiment_config({"model": {"in_dim": 16}})
    with pytest.raises(ConfigError, match="in_dim"):
        validate_config(cfg)


def test_resolved_config_round_trip(tmp_path):
    cfg = build_experiment_config(load_config_file(write_toml(tmp_path)), ["train.seed=9"])
    resolved = tmp_path / "resolved-config.json"
    resolved.write_text(json.dumps(config_to_dict(cfg)), encoding="utf-8")
    again = build_experiment_config(load_config_file(resolved))
    assert again == cfg


def test_apply_overrides_rejects_table_assignment():
    tree = config_to_dict(ExperimentConfig())
    with pytest.raises(ConfigError, match="table"):
        apply_overrides(tree, ["train=3"])
