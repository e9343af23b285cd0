"""Shared test utilities: independent oracles and instance generators."""

from __future__ import annotations

import numpy as np

from fedcl.nn import Layer, ModelParams


def flatten_params(params: ModelParams) -> np.ndarray:
    parts = []
    for layer in params.layers:
        parts.append(layer.w.ravel())
        parts.append(layer.b.ravel())
    return np.concatenate(parts)


def unflatten_params(template: ModelParams, vec: np.ndarray) -> ModelParams:
    layers = []
    pos = 0
    for layer in template.layers:
        w = vec[pos : pos + layer.w.size].reshape(layer.w.shape).copy()
        pos += layer.w.size
        b = vec[pos : pos + layer.b.size].copy()
        pos += layer.b.size
        layers.append(Layer(w, b))
    return ModelParams(tuple(layers))


def numeric_gradient(f, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences, one coordinate at a time."""
    grad = np.empty_like(x0)
    for i in range(x0.size):
        xp = x0.copy()
        xp[i] += h
        xm = x0.copy()
        xm[i] -= h
        grad[i] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def max_rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-4) -> float:
    """Coordinatewise relative error with a floor: entries where both
    values are below the floor are compared on an absolute scale, since
    relative error is meaningless at the finite-difference noise level."""
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def random_params(rng: np.random.Generator, dims, weight_scale: float = 0.7) -> ModelParams:
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = weight_scale * np.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = 0.1 * rng.standard_normal(fan_out)
        layers.append(Layer(w, b))
    return ModelParams(tuple(layers))


def relu_margin(params: ModelParams, batch: np.ndarray) -> float:
    """Smallest |pre-activation| over all hidden units; finite-difference
    probes must not push any unit across the ReLU kink."""
    a = batch
    margin = np.inf
    for layer in params.layers[:-1]:
        z = a @ layer.w + layer.b
        margin = min(margin, float(np.min(np.abs(z))))
        a = np.maximum(z, 0.0)
    return margin


def safe_instance(
    rng: np.random.Generator,
    depth: int,
    width: int,
    in_dim: int,
    n_classes: int,
    batch_size: int,
    margin: float = 3e-3,
):
    """Model, batch, labels and soft targets with every hidden
    pre-activation at least ``margin`` from zero."""
    dims = [in_dim] + [width] * (depth - 1) + [n_classes]
    while True:
        params = random_params(rng, dims)
        batch = rng.standard_normal((batch_size, in_dim))
        if relu_margin(params, batch) > margin:
            break
    labels = rng.integers(0, n_classes, size=batch_size)
    soft = rng.dirichlet(np.ones(n_classes), size=batch_size)
    return params, batch, labels, soft


def naive_forward_logits(params: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Brute-force per-element forward pass (explicit loops, no BLAS)."""
    a = batch
    for li, layer in enumerate(params.layers):
        out = np.zeros((a.shape[0], layer.w.shape[1]))
        for i in range(a.shape[0]):
            for j in range(layer.w.shape[1]):
                s = layer.b[j]
                for k in range(a.shape[1]):
                    s += a[i, k] * layer.w[k, j]
                out[i, j] = s
        a = out if li == len(params.layers) - 1 else np.maximum(out, 0.0)
    return a
