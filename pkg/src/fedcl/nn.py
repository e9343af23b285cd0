"""Dense ReLU network with hand-derived gradients and Adam updates.

All numeric state lives in float64 numpy arrays. Every operation here is
a pure function: inputs are never mutated and identical inputs produce
bit-identical outputs. The forward pass computes one fixed-shape product
per batch row, so a row's logits never depend on which batch it arrived
in (BLAS GEMM is not bitwise row-stable across batch sizes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .rng import check_seed

if TYPE_CHECKING:
    from .continual import LwfConfig


@dataclass(frozen=True)
class Hyper:
    """Optimizer and regularizer settings.

    ``l2`` is the coefficient of the 0.5 * ||W||^2 penalty applied to
    weight matrices only, never biases. ``lr == 0`` is allowed as a
    degenerate no-learning setting used in tests.
    """

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2: float = 1e-4

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if not 0 <= self.beta1 < 1:
            raise ConfigError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0 <= self.beta2 < 1:
            raise ConfigError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")


@dataclass(frozen=True)
class Layer:
    """One affine layer: weights [fan_in, fan_out] and bias [fan_out]."""

    w: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class ModelParams:
    """Ordered affine layers; also reused as the container for gradients
    and Adam moment buffers, which share the same shapes."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        if len(self.layers) < 2:
            raise ConfigError(f"model needs >= 2 layers, got {len(self.layers)}")
        for k, layer in enumerate(self.layers):
            if layer.w.ndim != 2 or layer.b.ndim != 1:
                raise ShapeError(f"layer {k}: w must be 2-D and b 1-D")
            if layer.w.shape[1] != layer.b.shape[0]:
                raise ShapeError(
                    f"layer {k}: bias length {layer.b.shape[0]} != fan_out {layer.w.shape[1]}"
                )
            if k and self.layers[k - 1].w.shape[1] != layer.w.shape[0]:
                raise ShapeError(
                    f"layer {k}: fan_in {layer.w.shape[0]} != previous fan_out "
                    f"{self.layers[k - 1].w.shape[1]}"
                )

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].w.shape[0]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].w.shape[1]

    def dims(self) -> tuple[int, ...]:
        return (self.in_dim,) + tuple(l.w.shape[1] for l in self.layers)

    @property
    def n_params(self) -> int:
        return sum(l.w.size + l.b.size for l in self.layers)

    def copy(self) -> "ModelParams":
        return ModelParams(tuple(Layer(l.w.copy(), l.b.copy()) for l in self.layers))


@dataclass(frozen=True)
class AdamState:
    """First/second moment buffers mirroring the model shapes plus the
    step counter; ``t`` increments by exactly one per ``adam_step``."""

    m: ModelParams
    v: ModelParams
    t: int = 0


@dataclass(frozen=True)
class ForwardTrace:
    """Everything the backward pass needs: ``inputs[k]`` is the activation
    entering layer k (``inputs[0]`` is the batch itself)."""

    inputs: tuple[np.ndarray, ...]
    logits: np.ndarray


def require_same_arch(a: ModelParams, b: ModelParams, what: str) -> None:
    if a.dims() != b.dims():
        raise ShapeError(f"{what}: dimension chain {b.dims()} != expected {a.dims()}")


def init_model(depth: int, width: int, in_dim: int, n_classes: int, seed: int) -> ModelParams:
    """He-uniform weights, zero biases, reproducible from ``seed``.

    ``depth`` counts all weight layers including the output layer, so the
    dimension chain is in_dim -> width * (depth - 1) -> n_classes.
    """
    if depth < 2:
        raise ConfigError(f"depth must be >= 2, got {depth}")
    if width < 1:
        raise ConfigError(f"width must be >= 1, got {width}")
    if in_dim < 1:
        raise ConfigError(f"in_dim must be >= 1, got {in_dim}")
    if n_classes < 2:
        raise ConfigError(f"n_classes must be >= 2, got {n_classes}")
    check_seed(seed)

    dims = [in_dim] + [width] * (depth - 1) + [n_classes]
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(Layer(w, np.zeros(fan_out)))
    return ModelParams(tuple(layers))


def zeros_like_params(params: ModelParams) -> ModelParams:
    return ModelParams(
        tuple(Layer(np.zeros_like(l.w), np.zeros_like(l.b)) for l in params.layers)
    )


def init_adam_state(params: ModelParams) -> AdamState:
    return AdamState(m=zeros_like_params(params), v=zeros_like_params(params), t=0)


def _affine_rows(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # One fixed-shape vector product per row: result for a row is
    # independent of batch size and row position.
    out = np.empty((x.shape[0], w.shape[1]))
    for i in range(x.shape[0]):
        out[i] = x[i] @ w
    out += b
    return out


def forward(params: ModelParams, batch: np.ndarray) -> ForwardTrace:
    """ReLU on hidden layers, affine output (logits are pre-softmax)."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.in_dim:
        raise ShapeError(
            f"batch has shape {batch.shape}, expected (B, {params.in_dim})"
        )
    a = batch
    inputs = [batch]
    for layer in params.layers[:-1]:
        a = np.maximum(_affine_rows(a, layer.w, layer.b), 0.0)
        inputs.append(a)
    last = params.layers[-1]
    logits = _affine_rows(a, last.w, last.b)
    if not np.all(np.isfinite(logits)):
        raise DataError("non-finite logits in forward pass")
    return ForwardTrace(tuple(inputs), logits)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_rows(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy and its gradient w.r.t. logits.

    Returns ``(loss, dlogits)`` with ``dlogits = (softmax - onehot) / B``.
    """
    labels = np.asarray(labels)
    n, n_classes = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape}, expected ({n},)")
    bad = np.flatnonzero((labels < 0) | (labels >= n_classes))
    if bad.size:
        raise DataError(
            f"label {labels[bad[0]]} out of range [0, {n_classes}) at row {bad[0]}"
        )
    log_p = _log_softmax(logits)
    rows = np.arange(n)
    loss = float(-log_p[rows, labels].mean())
    dlogits = np.exp(log_p)
    dlogits[rows, labels] -= 1.0
    dlogits /= n
    return loss, dlogits


def check_prob_rows(targets: np.ndarray, tol: float = 1e-6) -> None:
    sums = targets.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise DataError(
            f"soft target row {bad[0]} sums to {sums[bad[0]]!r}, expected 1 +/- {tol}"
        )


def soft_xent(
    logits: np.ndarray, target_probs: np.ndarray, temperature: float
) -> tuple[float, np.ndarray]:
    """Soft cross-entropy at temperature T against probability targets.

    ``loss = mean_b -sum_c t_bc * log softmax(logits/T)_bc`` and the
    gradient carries the 1/T chain factor:
    ``dlogits = (softmax(logits/T) - t) / (B * T)``.
    """
    if temperature <= 0:
        raise ConfigError(f"temperature must be > 0, got {temperature}")
    target_probs = np.asarray(target_probs, dtype=np.float64)
    if target_probs.shape != logits.shape:
        raise ShapeError(
            f"targets shape {target_probs.shape} != logits shape {logits.shape}"
        )
    check_prob_rows(target_probs)
    n = logits.shape[0]
    log_p = _log_softmax(logits / temperature)
    loss = float(-(target_probs * log_p).sum(axis=1).mean())
    dlogits = (np.exp(log_p) - target_probs) / (n * temperature)
    return loss, dlogits


def _backward(
    params: ModelParams, trace: ForwardTrace, dlogits: np.ndarray, l2: float
) -> ModelParams:
    g = dlogits
    grads: list[Optional[Layer]] = [None] * params.depth
    for k in reversed(range(params.depth)):
        a_in = trace.inputs[k]
        gw = a_in.T @ g
        if l2:
            gw += l2 * params.layers[k].w
        gb = g.sum(axis=0)
        grads[k] = Layer(gw, gb)
        if k:
            # ReLU derivative: the stored activation is positive iff the
            # pre-activation was.
            g = (g @ params.layers[k].w.T) * (a_in > 0.0)
    return ModelParams(tuple(grads))  # type: ignore[arg-type]


def loss_and_grads(
    params: ModelParams,
    batch: np.ndarray,
    labels: np.ndarray,
    soft_targets: Optional[np.ndarray] = None,
    lwf: "Optional[LwfConfig]" = None,
    hyper: Hyper = Hyper(),
) -> tuple[float, ModelParams]:
    """Total objective and its exact analytic gradients.

    loss = new-task cross-entropy
         + lambda0 * soft cross-entropy against ``soft_targets`` at
           temperature ``lwf.temperature`` (skipped entirely when
           ``soft_targets`` is None, lwf is disabled, or lambda0 == 0)
         + l2 * 0.5 * sum of squared weights (biases excluded).
    """
    trace = forward(params, batch)
    loss, dlogits = softmax_xent(trace.logits, labels)
    if soft_targets is not None:
        soft_targets = np.asarray(soft_targets, dtype=np.float64)
        if soft_targets.shape != trace.logits.shape:
            raise ShapeError(
                f"soft targets shape {soft_targets.shape} != logits shape "
                f"{trace.logits.shape}"
            )
        check_prob_rows(soft_targets)
        if lwf is not None and lwf.enabled and lwf.lambda0 != 0.0:
            old_loss, old_d = soft_xent(trace.logits, soft_targets, lwf.temperature)
            loss = loss + lwf.lambda0 * old_loss
            dlogits = dlogits + lwf.lambda0 * old_d
    grads = _backward(params, trace, dlogits, hyper.l2)
    if hyper.l2:
        loss += hyper.l2 * 0.5 * sum(float((l.w * l.w).sum()) for l in params.layers)
    if not np.isfinite(loss):
        raise DataError(f"non-finite loss {loss!r}")
    return loss, grads


def adam_step(
    params: ModelParams, grads: ModelParams, state: AdamState, hyper: Hyper
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update. Pure: inputs are not mutated."""
    require_same_arch(params, grads, "grads")
    require_same_arch(params, state.m, "adam state m")
    require_same_arch(params, state.v, "adam state v")
    if state.t < 0:
        raise ConfigError(f"adam step counter must be >= 0, got {state.t}")

    t = state.t + 1
    bc1 = 1.0 - hyper.beta1 ** t
    bc2 = 1.0 - hyper.beta2 ** t
    new_layers, m_layers, v_layers = [], [], []
    for p, g, m, v in zip(params.layers, grads.layers, state.m.layers, state.v.layers):
        new_wb = []
        for pw, gw, mw, vw in ((p.w, g.w, m.w, v.w), (p.b, g.b, m.b, v.b)):
            m2 = hyper.beta1 * mw + (1.0 - hyper.beta1) * gw
            v2 = hyper.beta2 * vw + (1.0 - hyper.beta2) * (gw * gw)
            update = hyper.lr * (m2 / bc1) / (np.sqrt(v2 / bc2) + hyper.eps)
            new_wb.append((pw - update, m2, v2))
        (w2, mw2, vw2), (b2, mb2, vb2) = new_wb
        if not (np.all(np.isfinite(w2)) and np.all(np.isfinite(b2))):
            raise DataError("non-finite parameters after adam step")
        new_layers.append(Layer(w2, b2))
        m_layers.append(Layer(mw2, mb2))
        v_layers.append(Layer(vw2, vb2))
    new_params = ModelParams(tuple(new_layers))
    new_state = AdamState(
        m=ModelParams(tuple(m_layers)), v=ModelParams(tuple(v_layers)), t=t
    )
    return new_params, new_state
