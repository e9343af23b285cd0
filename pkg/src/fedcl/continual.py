"""Learning-without-forgetting machinery.

Before training a new task, the current central model is frozen into a
teacher snapshot. Its temperature-softened class probabilities on the new
task's inputs are recorded once, and training then minimizes

    new-task cross-entropy
    + lambda0 * soft cross-entropy against the recorded teacher outputs
    + l2 weight penalty

so the student keeps reproducing the teacher's responses while fitting
the new labels. All events share one 10-class head, so the teacher and
student heads coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset, batch_index_chunks
from .errors import ConfigError, ShapeError
from .metrics import EvalResult, evaluate
from .nn import (
    Hyper,
    Layer,
    ModelParams,
    adam_step,
    forward,
    init_adam_state,
    loss_and_grads,
    require_same_arch,
    soft_xent,
    softmax_rows,
)
from .rng import check_seed


@dataclass(frozen=True)
class LwfConfig:
    """Weight and temperature of the old-task distillation term.

    ``enabled=False`` makes the training path identical to plain
    cross-entropy regardless of lambda0.
    """

    lambda0: float = 1.0
    temperature: float = 2.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.lambda0 < 0:
            raise ConfigError(f"lambda0 must be >= 0, got {self.lambda0}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class TeacherSnapshot:
    """Frozen copy of the model after ``taken_after_event``; the only
    memory of earlier tasks."""

    params: ModelParams
    taken_after_event: int


@dataclass(frozen=True)
class SoftLabels:
    """Temperature-softened teacher probabilities, one row per sample."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        if self.probs.ndim != 2:
            raise ShapeError(f"soft labels must be 2-D, got shape {self.probs.shape}")
        if np.any(self.probs < 0) or np.any(self.probs > 1):
            raise ConfigError("soft label entries must lie in [0, 1]")
        sums = self.probs.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-6)
        if bad.size:
            raise ConfigError(
                f"soft label row {bad[0]} sums to {sums[bad[0]]!r}, expected 1"
            )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 32
    hyper: Hyper = Hyper()
    lwf: LwfConfig = LwfConfig()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        check_seed(self.seed)


@dataclass(frozen=True)
class EpochMetrics:
    """Per-epoch curve point; valid fields are None when no validation
    set was supplied."""

    epoch: int
    train_loss: float
    train_accuracy: float
    valid_loss: Optional[float]
    valid_accuracy: Optional[float]


@dataclass(frozen=True)
class TaskResult:
    params: ModelParams
    per_epoch: tuple[EpochMetrics, ...]


def _frozen_copy(params: ModelParams) -> ModelParams:
    layers = []
    for layer in params.layers:
        w = layer.w.copy()
        b = layer.b.copy()
        w.setflags(write=False)
        b.setflags(write=False)
        layers.append(Layer(w, b))
    return ModelParams(tuple(layers))


def snapshot_teacher(params: ModelParams, event_idx: int) -> TeacherSnapshot:
    """Deep frozen copy; later updates to the live model never leak in."""
    if event_idx < 0:
        raise ConfigError(f"event_idx must be >= 0, got {event_idx}")
    return TeacherSnapshot(params=_frozen_copy(params), taken_after_event=event_idx)


def record_soft_labels(
    teacher: TeacherSnapshot, data: np.ndarray, temperature: float
) -> SoftLabels:
    """softmax(teacher logits / temperature), recorded once per task."""
    if temperature <= 0:
        raise ConfigError(f"temperature must be > 0, got {temperature}")
    logits = forward(teacher.params, data).logits
    return SoftLabels(probs=softmax_rows(logits / temperature))


def distillation_loss(
    student_logits: np.ndarray, targets, temperature: float
) -> tuple[float, np.ndarray]:
    """Soft cross-entropy of the student against recorded teacher rows.

    Returns ``(loss, dlogits)``; the gradient is exact, including the 1/T
    chain factor, and vanishes when the softened student matches the
    targets.
    """
    rows = targets.probs if isinstance(targets, SoftLabels) else np.asarray(targets)
    return soft_xent(student_logits, rows, temperature)


def train_on_task(
    params: ModelParams,
    train: Dataset,
    valid: Optional[Dataset],
    teacher: Optional[TeacherSnapshot],
    cfg: TrainConfig,
    track_metrics: bool = True,
) -> TaskResult:
    """Train one task with a fresh Adam state.

    Soft targets are recorded once before epoch 1 when a teacher is
    present and LwF is enabled. Each epoch draws a shuffle keyed by
    (cfg.seed, epoch) and trains on every batch including the short tail.
    With ``track_metrics`` the train/valid curves are evaluated after
    each epoch; the parameter trajectory is identical either way.
    """
    if train.dim != params.in_dim:
        raise ShapeError(f"train dim {train.dim} != model input dim {params.in_dim}")
    if train.n_classes != params.n_classes:
        raise ShapeError(
            f"train has {train.n_classes} classes, model outputs {params.n_classes}"
        )
    soft = None
    if teacher is not None and cfg.lwf.enabled:
        require_same_arch(params, teacher.params, "teacher")
        soft = record_soft_labels(teacher, train.features, cfg.lwf.temperature)

    state = init_adam_state(params)
    per_epoch = []
    for epoch in range(cfg.epochs):
        loss_sum = 0.0
        for idx in batch_index_chunks(train.n, cfg.batch_size, epoch, cfg.seed):
            soft_rows = soft.probs[idx] if soft is not None else None
            loss, grads = loss_and_grads(
                params,
                train.features[idx],
                train.labels[idx],
                soft_targets=soft_rows,
                lwf=cfg.lwf,
                hyper=cfg.hyper,
            )
            params, state = adam_step(params, grads, state, cfg.hyper)
            loss_sum += loss * idx.size
        if track_metrics:
            tr = evaluate(params, train)
            va: Optional[EvalResult] = evaluate(params, valid) if valid is not None else None
            per_epoch.append(
                EpochMetrics(
                    epoch=epoch,
                    train_loss=loss_sum / train.n,
                    train_accuracy=tr.accuracy,
                    valid_loss=va.loss if va else None,
                    valid_accuracy=va.accuracy if va else None,
                )
            )
    return TaskResult(params=params, per_epoch=tuple(per_epoch))
