"""Command line entry point.

Subcommands: ``run``, ``sweep``, ``baselines``, ``gen-synth``. All accept
``--config <path>`` (TOML or JSON), repeatable ``--set key=value``
overrides, ``--out <dir>`` and ``--seed <int>`` (shorthand for
train.seed). Exit codes: 0 success, 2 configuration error, 1 runtime
error.
"""

from __future__ import annotations

import argparse
import sys

from .config import build_experiment_config, load_config_file
from .errors import ConfigError, FedclError
from .experiment import (
    SWEEP_AXES,
    generate_synthetic_files,
    run_baselines,
    run_experiment,
    run_sweep,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key by dot path, e.g. fed.n_clients=5 (repeatable)",
    )
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="shorthand for train.seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedcl",
        description="Federated averaging with learning-without-forgetting "
        "over sentence-embedding events.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run one experiment per axis value")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated integers, e.g. 3,5,10,15,25"
    )

    p_base = sub.add_parser("baselines", help="run all four modes on shared data")
    _add_common(p_base)

    p_gen = sub.add_parser("gen-synth", help="write synthetic event CSV files")
    _add_common(p_gen)

    return parser


def _load_config(args):
    raw = load_config_file(args.config) if args.config else {}
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"train.seed={args.seed}")
    if args.out is not None:
        # json-quote so paths with special characters survive parsing
        overrides.append(f'output.dir="{args.out}"')
    return build_experiment_config(raw, overrides)


def _parse_values(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated integers, got {text!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "run":
            result = run_experiment(cfg)
            s = result.summary
            print(f"mode={s['mode']} events={s['n_events']}")
            print(f"cumulative mean test accuracy: {s['cumulative_mean_test_accuracy']:.4f}")
            if s["forgetting"] is not None:
                print(f"forgetting: {s['forgetting']:.4f}")
            print(f"wrote metrics.csv, summary.json, resolved-config.json to {cfg.output.dir}")
        elif args.command == "sweep":
            rows = run_sweep(cfg, args.axis, _parse_values(args.values))
            for r in rows:
                print(
                    f"{args.axis}={r['axis_value']}: train_acc={r['train_accuracy']:.4f} "
                    f"test_acc={r['test_accuracy']:.4f} test_loss={r['test_loss']:.4f}"
                )
            print(f"wrote sweep.csv to {cfg.output.dir}")
        elif args.command == "baselines":
            rows = run_baselines(cfg)
            for r in rows:
                print(
                    f"{r['mode']}: train_acc={r['train_accuracy']:.4f} "
                    f"test_acc={r['test_accuracy']:.4f}"
                )
            print(f"wrote baselines.csv to {cfg.output.dir}")
        elif args.command == "gen-synth":
            paths = generate_synthetic_files(cfg)
            print(f"wrote {len(paths)} files to {cfg.output.dir}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (FedclError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
