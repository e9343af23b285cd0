"""Federated averaging: partitioning, local updates, aggregation, rounds.

One round broadcasts the central model, trains it independently on every
client shard, and replaces it with the sample-weighted mean of the
returned models. Per-client seeds are derived from (seed, round, client),
never from scheduling, so parallel and sequential execution give
bit-identical results. The event-sequence driver chains events, snapshots
a teacher between them in the continual modes, and also runs the
centralized baselines (which bypass partitioning and aggregation but are
seeded as client 0 of round 0, making a one-client federated run
bit-identical to the centralized one).
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .continual import TeacherSnapshot, TrainConfig, snapshot_teacher, train_on_task
from .data import Dataset, EventSplits
from .errors import ConfigError, ProtocolError, ShardSizeWarning
from .metrics import EvalRecord, EvalResult, cumulative_mean, evaluate, forgetting
from .nn import Layer, ModelParams, init_model, require_same_arch
from .rng import derive_seed

MODES = ("fed_cl", "fed_only", "central_cl", "central_only")
PARTITION_STRATEGIES = ("iid", "label_skew")

# Recommended shard size range; desk-scale runs fall below it on purpose.
SHARD_SIZE_RANGE = (500, 1500)


@dataclass(frozen=True)
class ClientShard:
    client_id: int
    data: Dataset


@dataclass(frozen=True)
class FedConfig:
    """Client count, round budget, partition strategy and the shared
    training settings. ``train.epochs`` is ignored by the federated path;
    each local update runs ``local_epochs`` epochs."""

    n_clients: int
    rounds: int
    local_epochs: int
    train: TrainConfig
    partition: str = "iid"
    alpha: float = 0.5
    parallel: bool = False

    def __post_init__(self) -> None:
        if self.n_clients < 1:
            raise ConfigError(f"n_clients must be >= 1, got {self.n_clients}")
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.local_epochs < 1:
            raise ConfigError(f"local_epochs must be >= 1, got {self.local_epochs}")
        if self.partition not in PARTITION_STRATEGIES:
            raise ConfigError(
                f"partition must be one of {PARTITION_STRATEGIES}, got {self.partition!r}"
            )
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class ClientUpdate:
    params: ModelParams
    n_samples: int
    client_id: int

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")


@dataclass(frozen=True)
class ModelConfig:
    depth: int = 3
    width: int = 64
    in_dim: int = 32
    n_classes: int = 10


@dataclass(frozen=True)
class SequenceResult:
    params: ModelParams
    records: tuple[EvalRecord, ...]
    accuracy_matrix: list[list[float]]
    loss_matrix: list[list[float]]
    summary: dict


def partition_dataset(
    data: Dataset, n_clients: int, strategy: str = "iid", seed: int = 0, alpha: float = 0.5
) -> list[ClientShard]:
    """Split a dataset into disjoint, jointly covering client shards.

    iid: seeded shuffle, then near-equal splits (sizes differ by <= 1).
    label_skew: per-label Dirichlet(alpha) proportions over clients, with
    a repair pass moving single samples from the largest shard until
    every shard is non-empty. Within a shard, rows keep the parent
    dataset's order.
    """
    if n_clients < 1:
        raise ConfigError(f"n_clients must be >= 1, got {n_clients}")
    if n_clients > data.n:
        raise ConfigError(f"n_clients={n_clients} exceeds dataset size {data.n}")
    if strategy not in PARTITION_STRATEGIES:
        raise ConfigError(
            f"partition must be one of {PARTITION_STRATEGIES}, got {strategy!r}"
        )
    rng = np.random.default_rng(seed)

    if strategy == "iid":
        perm = rng.permutation(data.n)
        base, extra = divmod(data.n, n_clients)
        shards_idx = []
        start = 0
        for k in range(n_clients):
            size = base + (1 if k < extra else 0)
            shards_idx.append(perm[start : start + size])
            start += size
    else:
        if alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {alpha}")
        shards_idx = [np.empty(0, dtype=np.int64) for _ in range(n_clients)]
        for label in np.unique(data.labels):
            idx = np.flatnonzero(data.labels == label)
            idx = idx[rng.permutation(idx.size)]
            proportions = rng.dirichlet(np.full(n_clients, alpha))
            cuts = (np.cumsum(proportions) * idx.size).astype(np.int64)[:-1]
            for k, part in enumerate(np.split(idx, cuts)):
                shards_idx[k] = np.concatenate([shards_idx[k], part])
        # repair: every shard must end up non-empty
        while any(s.size == 0 for s in shards_idx):
            empty = next(k for k, s in enumerate(shards_idx) if s.size == 0)
            donor = int(np.argmax([s.size for s in shards_idx]))
            shards_idx[empty] = shards_idx[donor][-1:]
            shards_idx[donor] = shards_idx[donor][:-1]

    shards_idx = [np.sort(s) for s in shards_idx]
    sizes = [int(s.size) for s in shards_idx]
    lo, hi = SHARD_SIZE_RANGE
    off = sum(1 for s in sizes if not lo <= s <= hi)
    if off:
        warnings.warn(
            f"{off}/{n_clients} client shards outside the recommended "
            f"{lo}..{hi} sample range (sizes {sizes})",
            ShardSizeWarning,
            stacklevel=2,
        )
    return [ClientShard(client_id=k, data=data.take(s)) for k, s in enumerate(shards_idx)]


def local_update(
    central: ModelParams,
    shard: ClientShard,
    teacher: Optional[TeacherSnapshot],
    cfg: FedConfig,
    round_idx: int = 0,
) -> ClientUpdate:
    """Train the broadcast model on one shard for ``local_epochs`` with a
    seed derived from (cfg.train.seed, round_idx, client_id)."""
    seed = derive_seed(cfg.train.seed, round_idx, shard.client_id)
    tcfg = replace(cfg.train, epochs=cfg.local_epochs, seed=seed)
    result = train_on_task(
        central, shard.data, None, teacher, tcfg, track_metrics=False
    )
    return ClientUpdate(
        params=result.params, n_samples=shard.data.n, client_id=shard.client_id
    )


def aggregate(updates: Sequence[ClientUpdate]) -> ModelParams:
    """Sample-weighted mean of the client models.

    Weights are the ratios n_k / sum(n), so scaling every count by a
    common factor changes nothing. The sum is accumulated in the given
    list order (callers pass ascending client_id), anchored on the first
    update so averaging identical models returns them bit-exactly.
    """
    if not updates:
        raise ProtocolError("aggregate needs at least one client update")
    first = updates[0]
    for u in updates[1:]:
        require_same_arch(first.params, u.params, f"client {u.client_id} update")
    total = sum(u.n_samples for u in updates)
    weights = [u.n_samples / total for u in updates]

    layers = []
    for li in range(first.params.depth):
        acc_w = first.params.layers[li].w.copy()
        acc_b = first.params.layers[li].b.copy()
        for u, wt in zip(updates[1:], weights[1:]):
            dw = u.params.layers[li].w - first.params.layers[li].w
            db = u.params.layers[li].b - first.params.layers[li].b
            if np.any(dw):
                acc_w += wt * dw
            if np.any(db):
                acc_b += wt * db
        layers.append(Layer(acc_w, acc_b))
    return ModelParams(tuple(layers))


def run_event(
    central: ModelParams,
    event: EventSplits,
    teacher: Optional[TeacherSnapshot],
    cfg: FedConfig,
    event_idx: int = 0,
) -> tuple[ModelParams, list[EvalRecord], EvalResult]:
    """Federated rounds over one event: partition once, then per round
    broadcast, locally update every client, aggregate, evaluate on the
    validation split. Evaluates on the event's test split at the end.
    The teacher (if any) stays fixed for the whole event."""
    shards = partition_dataset(
        event.train, cfg.n_clients, cfg.partition, derive_seed(cfg.train.seed), cfg.alpha
    )
    records = []
    for round_idx in range(cfg.rounds):
        if cfg.parallel and cfg.n_clients > 1:
            workers = min(cfg.n_clients, os.cpu_count() or 1)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                updates = list(
                    pool.map(
                        lambda sh: local_update(central, sh, teacher, cfg, round_idx),
                        shards,
                    )
                )
        else:
            updates = [local_update(central, sh, teacher, cfg, round_idx) for sh in shards]
        central = aggregate(updates)
        va = evaluate(central, event.valid)
        records.append(
            EvalRecord(
                event=event_idx,
                round=round_idx,
                epoch=-1,
                split="valid",
                target_event=event_idx,
                loss=va.loss,
                accuracy=va.accuracy,
            )
        )
    test = evaluate(central, event.test)
    records.append(
        EvalRecord(
            event=event_idx,
            round=cfg.rounds - 1,
            epoch=-1,
            split="test",
            target_event=event_idx,
            loss=test.loss,
            accuracy=test.accuracy,
        )
    )
    return central, records, test


def _check_events(events: Sequence[EventSplits], model: ModelConfig) -> None:
    if not events:
        raise ConfigError("need at least one event")
    dim = events[0].train.dim
    names = events[0].train.label_names
    for i, ev in enumerate(events):
        if ev.train.dim != dim:
            raise ConfigError(f"event {i} dim {ev.train.dim} != event 0 dim {dim}")
        if ev.train.label_names != names:
            raise ConfigError(f"event {i} label space differs from event 0")
    if model.in_dim != dim:
        raise ConfigError(f"model.in_dim {model.in_dim} != data dim {dim}")
    if model.n_classes != len(names):
        raise ConfigError(
            f"model.n_classes {model.n_classes} != {len(names)} data classes"
        )


def run_event_sequence(
    events: Sequence[EventSplits], model: ModelConfig, cfg: FedConfig, mode: str
) -> SequenceResult:
    """Train one central model through the events in order.

    Modes: fed_cl (federated rounds + teacher carried between events),
    fed_only (federated, no teacher), central_cl and central_only (single
    in-process trainer running rounds * local_epochs epochs per event).
    After each event the model is evaluated on every event's test split,
    filling one accuracy-matrix row, plus a train-split summary row.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    _check_events(events, model)

    params = init_model(
        model.depth, model.width, model.in_dim, model.n_classes, cfg.train.seed
    )
    use_teacher = mode.endswith("_cl")
    is_federated = mode.startswith("fed_")
    teacher: Optional[TeacherSnapshot] = None
    records: list[EvalRecord] = []
    acc_matrix: list[list[float]] = []
    loss_matrix: list[list[float]] = []
    train_accs: list[float] = []

    for e, event in enumerate(events):
        event_seed = derive_seed(cfg.train.seed, e)
        own_test: Optional[EvalResult] = None
        if is_federated:
            fcfg = replace(cfg, train=replace(cfg.train, seed=event_seed))
            params, ev_records, own_test = run_event(
                params, event, teacher if use_teacher else None, fcfg, e
            )
            records.extend(ev_records)
            last_round, last_epoch = cfg.rounds - 1, -1
        else:
            epochs = cfg.rounds * cfg.local_epochs
            tcfg = replace(
                cfg.train, epochs=epochs, seed=derive_seed(event_seed, 0, 0)
            )
            result = train_on_task(
                params,
                event.train,
                event.valid,
                teacher if use_teacher else None,
                tcfg,
                track_metrics=True,
            )
            params = result.params
            for em in result.per_epoch:
                records.append(
                    EvalRecord(
                        event=e,
                        round=-1,
                        epoch=em.epoch,
                        split="train",
                        target_event=e,
                        loss=em.train_loss,
                        accuracy=em.train_accuracy,
                    )
                )
                records.append(
                    EvalRecord(
                        event=e,
                        round=-1,
                        epoch=em.epoch,
                        split="valid",
                        target_event=e,
                        loss=em.valid_loss,
                        accuracy=em.valid_accuracy,
                    )
                )
            last_round, last_epoch = -1, epochs - 1

        acc_row, loss_row = [], []
        for j, other in enumerate(events):
            if is_federated and j == e:
                te = own_test
            else:
                te = evaluate(params, other.test)
                records.append(
                    EvalRecord(
                        event=e,
                        round=last_round,
                        epoch=last_epoch,
                        split="test",
                        target_event=j,
                        loss=te.loss,
                        accuracy=te.accuracy,
                    )
                )
            acc_row.append(te.accuracy)
            loss_row.append(te.loss)
        acc_matrix.append(acc_row)
        loss_matrix.append(loss_row)

        tr = evaluate(params, event.train)
        train_accs.append(tr.accuracy)
        records.append(
            EvalRecord(
                event=e,
                round=-1,
                epoch=-1,
                split="train",
                target_event=e,
                loss=tr.loss,
                accuracy=tr.accuracy,
            )
        )
        if use_teacher:
            teacher = snapshot_teacher(params, e)

    n = len(events)
    summary = {
        "mode": mode,
        "n_events": n,
        "final_test_accuracy": acc_matrix[-1],
        "final_test_loss": loss_matrix[-1],
        "cumulative_mean_per_event": [cumulative_mean(acc_matrix, i + 1) for i in range(n)],
        "cumulative_mean_test_accuracy": cumulative_mean(acc_matrix, n),
        "mean_final_test_loss": float(np.mean(loss_matrix[-1])),
        "forgetting": forgetting(acc_matrix) if n >= 2 else None,
        "train_accuracy_per_event": train_accs,
        "train_accuracy": float(np.mean(train_accs)),
    }
    return SequenceResult(
        params=params,
        records=tuple(records),
        accuracy_matrix=acc_matrix,
        loss_matrix=loss_matrix,
        summary=summary,
    )
