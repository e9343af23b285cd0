#!/usr/bin/env python3
"""Desk-scale comparison of all four training modes on the synthetic
3-event suite, averaged over several seeds.

Prints one line per mode with cumulative-mean train/test accuracy plus
the forgetting measure, the same quantities the baselines subcommand
writes for a single seed.

    python scripts/desk_baselines.py --seeds 5 --out out/desk_baselines
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fedcl.config import build_experiment_config, load_config_file
from fedcl.experiment import BASELINE_MODES, build_events, make_fed_config
from fedcl.federated import run_event_sequence

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "desk.toml")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--config", default=CONFIG)
    ap.add_argument("--out", default="out/desk_baselines")
    args = ap.parse_args()

    raw = load_config_file(args.config)
    results = {m: {"train": [], "test": [], "forget": []} for m in BASELINE_MODES}
    for seed in range(args.seeds):
        cfg = build_experiment_config(raw, [f"train.seed={seed}"])
        events = build_events(cfg.data)
        for mode in BASELINE_MODES:
            r = run_event_sequence(events, cfg.model, make_fed_config(cfg), mode)
            results[mode]["train"].append(r.summary["train_accuracy"])
            results[mode]["test"].append(r.summary["cumulative_mean_test_accuracy"])
            results[mode]["forget"].append(r.summary["forgetting"] or 0.0)

    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "baselines_mean.csv")
    with open(out_csv, "w", encoding="utf-8") as fh:
        fh.write("mode,train_accuracy,test_accuracy,forgetting\n")
        print(f"{'mode':14s} {'train':>7s} {'test':>7s} {'forget':>7s}   ({args.seeds} seeds)")
        for mode in BASELINE_MODES:
            tr = np.mean(results[mode]["train"])
            te = np.mean(results[mode]["test"])
            fo = np.mean(results[mode]["forget"])
            fh.write(f"{mode},{tr:.9g},{te:.9g},{fo:.9g}\n")
            print(f"{mode:14s} {tr:7.4f} {te:7.4f} {fo:7.4f}")
    print(f"wrote {out_csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
