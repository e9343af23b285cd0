"""Deterministic seed derivation for independent random streams.

Every source of randomness in the package is a fresh ``numpy`` generator
built from an integer seed, and child seeds are derived with
``SeedSequence(base, spawn_key=parts)``. Distinct part tuples (including
tuples of different length) map to distinct, independent streams, so the
derivation is injective in ``(base, parts)`` and results never depend on
scheduling or call order.

Derivation scheme used by the training stack, with ``s`` the experiment
seed:

* per-event seed:        ``derive_seed(s, event_idx)``
* per-client train seed: ``derive_seed(event_seed, round_idx, client_id)``
* partition seed:        ``derive_seed(event_seed)``

The centralized trainer is seeded as client 0 of round 0
(``derive_seed(event_seed, 0, 0)``), which makes a one-client federated
run bit-identical to a centralized run of the same length.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def check_seed(seed: int, name: str = "seed") -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"{name} must be a non-negative integer, got {seed!r}")
    return int(seed)


def derive_seed(base: int, *parts: int) -> int:
    """Derive a 64-bit child seed from ``base`` and an index tuple."""
    check_seed(base, "base seed")
    for p in parts:
        check_seed(p, "seed part")
    ss = np.random.SeedSequence(base, spawn_key=tuple(int(p) for p in parts))
    return int(ss.generate_state(1, np.uint64)[0])


def rng_from(base: int, *parts: int) -> np.random.Generator:
    """Generator for the stream identified by ``(base, parts)``."""
    if parts:
        return np.random.default_rng(derive_seed(base, *parts))
    return np.random.default_rng(check_seed(base))
