"""Evaluation, forgetting measurement, cumulative summaries, metrics export.

The accuracy matrix is a list of rows, one per completed event: row i
holds test accuracy on every event after finishing event i (entries for
j > i are cross-task evaluations). The exported CSV schema is exactly
``event,round,epoch,split,target_event,loss,accuracy`` with floats at 9
significant digits; ``-1`` marks an inapplicable round or epoch.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError
from .nn import ModelParams, forward, softmax_xent

CSV_HEADER = "event,round,epoch,split,target_event,loss,accuracy"
_SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class EvalResult:
    loss: float
    accuracy: float


@dataclass(frozen=True)
class EvalRecord:
    """One curve point: where in training it was measured and on what."""

    event: int
    round: int
    epoch: int
    split: str
    target_event: int
    loss: float
    accuracy: float

    def __post_init__(self) -> None:
        if self.split not in _SPLITS:
            raise ConfigError(f"split must be one of {_SPLITS}, got {self.split!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise DataError(f"accuracy {self.accuracy!r} outside [0, 1]")
        if self.loss < 0:
            raise DataError(f"loss {self.loss!r} is negative")


def evaluate(params: ModelParams, data: Dataset) -> EvalResult:
    """Mean cross-entropy and argmax accuracy; argmax ties go to the
    lowest class index."""
    trace = forward(params, data.features)
    loss, _ = softmax_xent(trace.logits, data.labels)
    preds = trace.logits.argmax(axis=1)
    accuracy = float((preds == data.labels).mean())
    return EvalResult(loss=loss, accuracy=accuracy)


def _check_matrix(matrix: Sequence[Sequence[float]]) -> None:
    for i, row in enumerate(matrix):
        if len(row) < min(i + 1, len(matrix)):
            raise ConfigError(
                f"accuracy matrix row {i} has {len(row)} entries, needs >= {i + 1}"
            )
        for a in row:
            if not 0.0 <= a <= 1.0:
                raise DataError(f"accuracy {a!r} outside [0, 1] in matrix row {i}")


def forgetting(matrix: Sequence[Sequence[float]]) -> float:
    """Mean over earlier events of (best accuracy ever seen on it, from
    its own event onward) minus (accuracy on it after the last event).
    Non-negative by construction."""
    if len(matrix) < 2:
        raise ConfigError(f"forgetting needs >= 2 completed events, got {len(matrix)}")
    _check_matrix(matrix)
    last = len(matrix) - 1
    drops = []
    for j in range(last):
        best = max(matrix[i][j] for i in range(j, last + 1))
        drops.append(best - matrix[last][j])
    result = float(np.mean(drops))
    assert result >= 0.0
    return result


def cumulative_mean(matrix: Sequence[Sequence[float]], upto: int) -> float:
    """Mean accuracy over the first ``upto`` events, measured after
    finishing event ``upto - 1``."""
    if upto < 1:
        raise ConfigError(f"upto must be >= 1, got {upto}")
    if upto > len(matrix):
        raise ConfigError(f"upto={upto} exceeds {len(matrix)} completed events")
    _check_matrix(matrix)
    return float(np.mean(matrix[upto - 1][:upto]))


def _g9(x: float) -> float:
    return float(format(x, ".9g"))


def write_metrics(records: Sequence[EvalRecord], path, fmt: str = "csv") -> None:
    """Write records as CSV or JSON (floats at 9 significant digits)."""
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in records:
                fh.write(
                    f"{r.event},{r.round},{r.epoch},{r.split},{r.target_event},"
                    f"{r.loss:.9g},{r.accuracy:.9g}\n"
                )
    elif fmt == "json":
        rows = []
        for r in records:
            d = asdict(r)
            d["loss"] = _g9(r.loss)
            d["accuracy"] = _g9(r.accuracy)
            rows.append(d)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(rows, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}")


def read_metrics_csv(path) -> list[EvalRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: missing metrics header")
    records = []
    for ln in lines[1:]:
        ev, rd, ep, split, tgt, loss, acc = ln.split(",")
        records.append(
            EvalRecord(
                event=int(ev),
                round=int(rd),
                epoch=int(ep),
                split=split,
                target_event=int(tgt),
                loss=float(loss),
                accuracy=float(acc),
            )
        )
    return records
