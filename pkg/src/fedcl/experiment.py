"""Experiment assembly: config -> events -> sequence run -> output files.

Every entry point writes into an output directory:

* ``run``:       metrics.csv (and metrics.json when requested),
                 summary.json, resolved-config.json
* ``sweep``:     sweep.csv with one row per axis value, resolved-config.json
* ``baselines``: baselines.csv with one row per mode, resolved-config.json
* ``gen-synth``: one embedding CSV per event split

Reruns with an identical config and seed produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import replace
from typing import Sequence

from .config import (
    DataConfig,
    ExperimentConfig,
    config_to_dict,
    validate_config,
)
from .continual import LwfConfig, TrainConfig
from .data import EventSplits, load_embedding_csv, synth_gaussian, write_embedding_csv
from .errors import ConfigError
from .federated import FedConfig, SequenceResult, run_event_sequence
from .metrics import write_metrics
from .nn import Hyper
from .rng import derive_seed

BASELINE_MODES = ("central_only", "central_cl", "fed_only", "fed_cl")
SWEEP_AXES = ("depth", "clients")


def build_events(data_cfg: DataConfig) -> list[EventSplits]:
    """Materialize the event sequence from files or the synthetic generator."""
    if data_cfg.source == "files":
        events = []
        for i, ev in enumerate(data_cfg.files):
            events.append(
                EventSplits(
                    name=f"event{i}",
                    train=load_embedding_csv(ev.train),
                    valid=load_embedding_csv(ev.valid),
                    test=load_embedding_csv(ev.test),
                )
            )
        if not events:
            raise ConfigError("data.source is 'files' but data.files is empty")
        return events

    sc = data_cfg.synthetic
    events = []
    for i in range(sc.n_events):
        def draw(per_class: int, split_idx: int):
            return synth_gaussian(
                n_per_class=per_class,
                n_classes=sc.n_classes,
                dim=sc.dim,
                center_scale=sc.center_scale,
                noise_sigma=sc.noise_sigma,
                center_seed=sc.center_seed + i,
                sample_seed=derive_seed(sc.sample_seed, i, split_idx),
            )

        events.append(
            EventSplits(
                name=f"event{i}",
                train=draw(sc.train_per_class, 0),
                valid=draw(sc.valid_per_class, 1),
                test=draw(sc.test_per_class, 2),
            )
        )
    return events


def make_fed_config(cfg: ExperimentConfig) -> FedConfig:
    train = TrainConfig(
        epochs=cfg.fed.local_epochs,
        batch_size=cfg.train.batch_size,
        hyper=Hyper(lr=cfg.train.lr, l2=cfg.train.l2),
        lwf=LwfConfig(
            lambda0=cfg.train.lambda0, temperature=cfg.train.temperature, enabled=True
        ),
        seed=cfg.train.seed,
    )
    return FedConfig(
        n_clients=cfg.fed.n_clients,
        rounds=cfg.fed.rounds,
        local_epochs=cfg.fed.local_epochs,
        train=train,
        partition=cfg.fed.partition,
        alpha=cfg.fed.alpha,
        parallel=cfg.fed.parallel,
    )


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _prepare(cfg: ExperimentConfig, out_dir=None):
    validate_config(cfg)
    out = out_dir if out_dir is not None else cfg.output.dir
    os.makedirs(out, exist_ok=True)
    return build_events(cfg.data), out


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> SequenceResult:
    """Execute the configured event sequence and write the run files."""
    events, out = _prepare(cfg, out_dir)
    result = run_event_sequence(events, cfg.model, make_fed_config(cfg), cfg.mode)
    write_metrics(result.records, os.path.join(out, "metrics.csv"), "csv")
    if "json" in cfg.output.formats:
        write_metrics(result.records, os.path.join(out, "metrics.json"), "json")
    _write_json(result.summary, os.path.join(out, "summary.json"))
    _write_json(config_to_dict(cfg), os.path.join(out, "resolved-config.json"))
    return result


def run_sweep(cfg: ExperimentConfig, axis: str, values: Sequence[int], out_dir=None) -> list[dict]:
    """One full experiment per axis value with a shared seed; emits
    sweep.csv with columns axis_value,train_accuracy,test_accuracy,test_loss."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    if not values:
        raise ConfigError("sweep needs at least one axis value")
    events, out = _prepare(cfg, out_dir)
    rows = []
    for value in values:
        if axis == "depth":
            cfg_v = replace(cfg, model=replace(cfg.model, depth=int(value)))
        else:
            cfg_v = replace(cfg, fed=replace(cfg.fed, n_clients=int(value)))
        result = run_event_sequence(events, cfg_v.model, make_fed_config(cfg_v), cfg_v.mode)
        s = result.summary
        rows.append(
            {
                "axis_value": int(value),
                "train_accuracy": s["train_accuracy"],
                "test_accuracy": s["cumulative_mean_test_accuracy"],
                "test_loss": s["mean_final_test_loss"],
            }
        )
    with open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("axis_value,train_accuracy,test_accuracy,test_loss\n")
        for r in rows:
            fh.write(
                f"{r['axis_value']},{r['train_accuracy']:.9g},"
                f"{r['test_accuracy']:.9g},{r['test_loss']:.9g}\n"
            )
    _write_json(config_to_dict(cfg), os.path.join(out, "resolved-config.json"))
    return rows


def run_baselines(cfg: ExperimentConfig, out_dir=None) -> list[dict]:
    """All four modes on one shared seed and dataset; emits baselines.csv
    with per-mode cumulative-mean train/test accuracy."""
    events, out = _prepare(cfg, out_dir)
    rows = []
    for mode in BASELINE_MODES:
        cfg_m = replace(cfg, mode=mode)
        result = run_event_sequence(events, cfg_m.model, make_fed_config(cfg_m), mode)
        s = result.summary
        rows.append(
            {
                "mode": mode,
                "train_accuracy": s["train_accuracy"],
                "test_accuracy": s["cumulative_mean_test_accuracy"],
            }
        )
    with open(os.path.join(out, "baselines.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mode,train_accuracy,test_accuracy\n")
        for r in rows:
            fh.write(f"{r['mode']},{r['train_accuracy']:.9g},{r['test_accuracy']:.9g}\n")
    _write_json(config_to_dict(cfg), os.path.join(out, "resolved-config.json"))
    return rows


def generate_synthetic_files(cfg: ExperimentConfig, out_dir=None) -> list[str]:
    """Write the configured synthetic events as embedding CSVs."""
    if cfg.data.source != "synthetic":
        raise ConfigError("gen-synth requires data.source = 'synthetic'")
    events, out = _prepare(cfg, out_dir)
    paths = []
    for i, ev in enumerate(events):
        for split in ("train", "valid", "test"):
            path = os.path.join(out, f"event{i}_{split}.csv")
            write_embedding_csv(getattr(ev, split), path)
            paths.append(path)
    return paths
