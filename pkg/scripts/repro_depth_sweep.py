#!/usr/bin/env python3
"""Centralized depth sweep on user-supplied 512-d embedding files.

Expects a directory of eventN_{train,valid,test}.csv files (see the
README for the format; pool everything into a single event0 triple to
sweep over the whole corpus). Trains depth 3/5/10/15/25 networks of
width 100 for 50 epochs each, batch 32, lr 0.001, and writes sweep.csv.

    python scripts/repro_depth_sweep.py --data-dir data/humaid --out out/depth_sweep
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fedcl.config import build_experiment_config
from fedcl.experiment import run_sweep


def collect_events(data_dir: str) -> list[dict]:
    events = []
    i = 0
    while os.path.isfile(os.path.join(data_dir, f"event{i}_train.csv")):
        events.append(
            {
                "train": os.path.join(data_dir, f"event{i}_train.csv"),
                "valid": os.path.join(data_dir, f"event{i}_valid.csv"),
                "test": os.path.join(data_dir, f"event{i}_test.csv"),
            }
        )
        i += 1
    return events


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-dir", required=True)
    ap.add_argument("--out", default="out/depth_sweep")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--depths", default="3,5,10,15,25")
    args = ap.parse_args()

    events = collect_events(args.data_dir)
    if not events:
        print(f"no event0_train.csv under {args.data_dir}", file=sys.stderr)
        return 2
    cfg = build_experiment_config(
        {
            "mode": "central_only",
            "model": {"depth": 10, "width": 100, "in_dim": 512, "n_classes": 10},
            "fed": {"n_clients": 1, "rounds": 10, "local_epochs": 5},
            "train": {"lr": 0.001, "batch_size": 32, "seed": args.seed},
            "data": {"source": "files", "files": events},
        }
    )
    depths = [int(d) for d in args.depths.split(",")]
    rows = run_sweep(cfg, "depth", depths, out_dir=args.out)
    for r in rows:
        print(
            f"depth={r['axis_value']:3d}  train_acc={r['train_accuracy']:.4f}  "
            f"test_acc={r['test_accuracy']:.4f}  test_loss={r['test_loss']:.4f}"
        )
    print(f"wrote {os.path.join(args.out, 'sweep.csv')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
