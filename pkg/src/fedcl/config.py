"""Experiment configuration: TOML/JSON files, dot-path overrides, schema.

The normative keys are::

    mode = "fed_cl" | "fed_only" | "central_cl" | "central_only"
    [model]   depth, width, in_dim, n_classes
    [fed]     n_clients, rounds, local_epochs, partition, alpha, parallel
    [train]   batch_size, lr, l2, lambda0, temperature, seed
    [data]    source = "synthetic" | "files"
    [data.synthetic]  n_events, train_per_class, valid_per_class,
                      test_per_class, dim, n_classes, center_scale,
                      noise_sigma, center_seed, sample_seed
    [[data.files]]    train, valid, test  (one table per event)
    [output]  dir, formats

Defaults form the desk-scale profile (3 synthetic events, depth 3,
4 rounds x 5 local epochs). ``resolved-config.json`` written by a run can
be fed back as ``--config`` and reproduces the run byte-identically.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .federated import MODES, PARTITION_STRATEGIES, ModelConfig


@dataclass(frozen=True)
class FedSettings:
    n_clients: int = 3
    rounds: int = 4
    local_epochs: int = 5
    partition: str = "iid"
    alpha: float = 0.5
    parallel: bool = False


@dataclass(frozen=True)
class TrainSettings:
    batch_size: int = 32
    lr: float = 0.001
    l2: float = 1e-4
    lambda0: float = 1.0
    temperature: float = 2.0
    seed: int = 0


@dataclass(frozen=True)
class SyntheticConfig:
    """Per-event cluster data; event i re-draws class centers with
    center_seed + i (distribution drift) and uses sample seeds derived
    from (sample_seed, event, split)."""

    n_events: int = 3
    train_per_class: int = 30
    valid_per_class: int = 10
    test_per_class: int = 20
    dim: int = 32
    n_classes: int = 10
    center_scale: float = 4.0
    noise_sigma: float = 1.0
    center_seed: int = 1000
    sample_seed: int = 2000


@dataclass(frozen=True)
class FileEventConfig:
    train: str = ""
    valid: str = ""
    test: str = ""


@dataclass(frozen=True)
class DataConfig:
    source: str = "synthetic"
    synthetic: SyntheticConfig = SyntheticConfig()
    files: tuple[FileEventConfig, ...] = ()


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    formats: tuple[str, ...] = ("csv",)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "central_cl"
    model: ModelConfig = ModelConfig()
    fed: FedSettings = FedSettings()
    train: TrainSettings = TrainSettings()
    data: DataConfig = DataConfig()
    output: OutputConfig = OutputConfig()


def _to_plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value):
        return {f.name: _to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    return value


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return _to_plain(cfg)


def load_config_file(path) -> dict:
    """Parse a TOML (default) or JSON config file into a nested dict."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
    else:
        try:
            raw = tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: invalid TOML: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return raw


def _merge(base: dict, update: dict, path: str = "") -> None:
    for key, value in update.items():
        dotted = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {dotted}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, dotted)
        else:
            base[key] = value


def parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must have the form key=value")
    key, _, raw = item.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    raw = raw.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(tree: dict, overrides) -> None:
    """Apply dot-path key=value overrides; every key must already exist."""
    for item in overrides:
        key, value = parse_override(item)
        parts = key.split(".")
        node = tree
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key: {key}")
            node = node[part]
        leaf = parts[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"unknown config key: {key}")
        if isinstance(node[leaf], dict):
            raise ConfigError(f"config key {key} is a table, not a value")
        node[leaf] = value


def _coerce(name: str, value: Any, target_type: type) -> Any:
    if target_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {name} must be a number, got {value!r}")
        return float(value)
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {name} must be an integer, got {value!r}")
        return value
    if target_type is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config key {name} must be a boolean, got {value!r}")
        return value
    if target_type is str:
        if not isinstance(value, str):
            raise ConfigError(f"config key {name} must be a string, got {value!r}")
        return value
    return value


def _build_dataclass(cls, tree: dict, path: str):
    # Only used for flat dataclasses whose fields all have scalar defaults.
    kwargs = {}
    for f in dataclasses.fields(cls):
        dotted = f"{path}.{f.name}" if path else f.name
        if f.name in tree:
            kwargs[f.name] = _coerce(dotted, tree[f.name], type(f.default))
    return cls(**kwargs)


def build_experiment_config(raw: dict, overrides=()) -> ExperimentConfig:
    """Merge a parsed config onto the defaults, apply overrides, build
    the typed config. Unknown keys fail naming the offending dot path."""
    tree = config_to_dict(ExperimentConfig())
    _merge(tree, raw)
    apply_overrides(tree, overrides)

    mode = _coerce("mode", tree["mode"], str)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

    model = _build_dataclass(ModelConfig, tree["model"], "model")
    fed = _build_dataclass(FedSettings, tree["fed"], "fed")
    if fed.partition not in PARTITION_STRATEGIES:
        raise ConfigError(
            f"fed.partition must be one of {PARTITION_STRATEGIES}, got {fed.partition!r}"
        )
    train = _build_dataclass(TrainSettings, tree["train"], "train")

    data_tree = tree["data"]
    source = _coerce("data.source", data_tree["source"], str)
    if source not in ("synthetic", "files"):
        raise ConfigError(
            f"data.source must be 'synthetic' or 'files', got {source!r}"
        )
    synthetic = _build_dataclass(SyntheticConfig, data_tree["synthetic"], "data.synthetic")
    files = []
    for i, entry in enumerate(data_tree["files"]):
        if not isinstance(entry, dict):
            raise ConfigError(f"data.files[{i}] must be a table of train/valid/test paths")
        unknown = set(entry) - {"train", "valid", "test"}
        if unknown:
            raise ConfigError(f"unknown config key: data.files[{i}].{sorted(unknown)[0]}")
        files.append(
            FileEventConfig(
                train=_coerce(f"data.files[{i}].train", entry.get("train", ""), str),
                valid=_coerce(f"data.files[{i}].valid", entry.get("valid", ""), str),
                test=_coerce(f"data.files[{i}].test", entry.get("test", ""), str),
            )
        )
    data = DataConfig(source=source, synthetic=synthetic, files=tuple(files))

    out_tree = tree["output"]
    formats = out_tree["formats"]
    if isinstance(formats, str):
        formats = [formats]
    if not isinstance(formats, list) or not formats:
        raise ConfigError("output.formats must be a non-empty list")
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output.formats entries must be 'csv' or 'json', got {fmt!r}")
    output = OutputConfig(
        dir=_coerce("output.dir", out_tree["dir"], str), formats=tuple(formats)
    )

    return ExperimentConfig(
        mode=mode, model=model, fed=fed, train=train, data=data, output=output
    )


def validate_config(cfg: ExperimentConfig) -> None:
    """Checks that need the environment: referenced files must exist,
    model and data dimensions must agree."""
    if cfg.data.source == "files":
        if not cfg.data.files:
            raise ConfigError("data.source is 'files' but data.files is empty")
        for i, ev in enumerate(cfg.data.files):
            for split in ("train", "valid", "test"):
                p = getattr(ev, split)
                if not p:
                    raise ConfigError(f"data.files[{i}].{split} is empty")
                if not os.path.isfile(p):
                    raise ConfigError(f"data.files[{i}].{split}: file not found: {p}")
    else:
        if cfg.model.in_dim != cfg.data.synthetic.dim:
            raise ConfigError(
                f"model.in_dim {cfg.model.in_dim} != data.synthetic.dim "
                f"{cfg.data.synthetic.dim}"
            )
        if cfg.model.n_classes != cfg.data.synthetic.n_classes:
            raise ConfigError(
                f"model.n_classes {cfg.model.n_classes} != data.synthetic.n_classes "
                f"{cfg.data.synthetic.n_classes}"
            )
