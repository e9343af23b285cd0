"""Dataset carriers, embedding CSV files, synthetic clusters, splits, batches.

The embedding CSV format is UTF-8 with LF line endings: optional leading
``#`` comment lines (``# n_classes=<k>`` declares the label space,
default 10), then a header ``label,e0,e1,...,e{dim-1}``, then one row per
sample: integer label followed by ``dim`` decimal floats. The paired
writer emits floats with 17 significant digits so a round trip is
bit-exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import ConfigError, DataError, FormatError
from .rng import check_seed, rng_from

HUMAID_LABEL_NAMES = (
    "caution and advice",
    "displaced people and evacuations",
    "infrastructure and utility damage",
    "injured or dead people",
    "missing or found people",
    "not humanitarian",
    "other relevant information",
    "requests or urgent needs",
    "rescue volunteering or donation effort",
    "sympathy and support",
)


def default_label_names(n_classes: int) -> tuple[str, ...]:
    if n_classes == 10:
        return HUMAID_LABEL_NAMES
    return tuple(f"class_{i}" for i in range(n_classes))


@dataclass(frozen=True)
class Dataset:
    """N embedding rows with integer labels in ``[0, n_classes)``."""

    features: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...] = HUMAID_LABEL_NAMES

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if feats.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {feats.shape}")
        if feats.shape[0] < 1:
            raise DataError("dataset is empty")
        if labels.shape != (feats.shape[0],):
            raise DataError(
                f"labels shape {labels.shape} does not match {feats.shape[0]} rows"
            )
        if not self.label_names:
            raise DataError("label_names must be non-empty")
        n_classes = len(self.label_names)
        bad = np.flatnonzero((labels < 0) | (labels >= n_classes))
        if bad.size:
            raise DataError(
                f"label {labels[bad[0]]} out of range [0, {n_classes}) at row {bad[0]}"
            )
        if not np.all(np.isfinite(feats)):
            row, col = np.argwhere(~np.isfinite(feats))[0]
            raise DataError(f"non-finite feature at row {row}, column {col}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def take(self, indices: np.ndarray) -> "Dataset":
        """Subset by row indices (copies)."""
        return Dataset(self.features[indices], self.labels[indices], self.label_names)


@dataclass(frozen=True)
class EventSplits:
    """One continual-learning task: its train/valid/test splits."""

    name: str
    train: Dataset
    valid: Dataset
    test: Dataset

    def __post_init__(self) -> None:
        for split_name, ds in (("valid", self.valid), ("test", self.test)):
            if ds.dim != self.train.dim:
                raise ConfigError(
                    f"{split_name} dim {ds.dim} != train dim {self.train.dim}"
                )
            if ds.label_names != self.train.label_names:
                raise ConfigError(f"{split_name} label space differs from train")


_HEADER_RE = re.compile(r"^label(,e\d+)+$")
_NCLASSES_RE = re.compile(r"^#\s*n_classes\s*=\s*(\d+)\s*$")


def write_embedding_csv(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n_classes={data.n_classes}\n")
        fh.write("label," + ",".join(f"e{i}" for i in range(data.dim)) + "\n")
        for label, row in zip(data.labels, data.features):
            fh.write(f"{label}," + ",".join(format(x, ".17g") for x in row) + "\n")


def load_embedding_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")

    n_classes = 10
    header_line = 0
    dim = None
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _NCLASSES_RE.match(line)
            if m:
                n_classes = int(m.group(1))
                if n_classes < 2:
                    raise FormatError(f"line {ln}: n_classes must be >= 2")
            continue
        if not _HEADER_RE.match(line):
            raise FormatError(
                f"line {ln}: malformed header {line.split(',')[0]!r}..., "
                "expected 'label,e0,e1,...'"
            )
        cols = line.split(",")
        expected = ["label"] + [f"e{i}" for i in range(len(cols) - 1)]
        if cols != expected:
            raise FormatError(f"line {ln}: embedding columns must be e0..e{len(cols) - 2}")
        dim = len(cols) - 1
        header_line = ln
        break
    if dim is None:
        raise FormatError("line 1: missing header 'label,e0,e1,...'")

    feats, labels = [], []
    row = 0
    for ln, raw in enumerate(lines[header_line:], start=header_line + 1):
        line = raw.strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != dim + 1:
            raise FormatError(
                f"line {ln}: expected {dim + 1} fields, got {len(cells)}"
            )
        try:
            label = int(cells[0])
        except ValueError:
            raise DataError(
                f"row {row} (line {ln}), column 0: {cells[0]!r} is not an integer label"
            ) from None
        if not 0 <= label < n_classes:
            raise DataError(
                f"row {row} (line {ln}): label {label} out of range [0, {n_classes})"
            )
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError:
            for col, c in enumerate(cells[1:], start=1):
                try:
                    float(c)
                except ValueError:
                    raise DataError(
                        f"row {row} (line {ln}), column {col}: {c!r} is not a number"
                    ) from None
            raise
        feats.append(values)
        labels.append(label)
        row += 1
    if not feats:
        raise FormatError(f"line {header_line}: no data rows after header")
    return Dataset(
        np.array(feats, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        default_label_names(n_classes),
    )


def synth_gaussian(
    n_per_class: int,
    n_classes: int,
    dim: int,
    center_scale: float,
    noise_sigma: float,
    center_seed: int,
    sample_seed: int,
) -> Dataset:
    """Gaussian clusters with one unit-direction center per class.

    Class c's center is ``center_scale`` times a unit-normalized Gaussian
    draw keyed by ``(center_seed, c)``; samples add
    ``noise_sigma * standard normal`` keyed by ``(sample_seed, c)``.
    Re-drawing with a different ``center_seed`` models distribution drift
    between events while keeping the label set fixed.
    """
    if n_per_class < 1 or n_classes < 1 or dim < 1:
        raise ConfigError(
            f"counts must be >= 1, got n_per_class={n_per_class}, "
            f"n_classes={n_classes}, dim={dim}"
        )
    if noise_sigma < 0:
        raise ConfigError(f"noise_sigma must be >= 0, got {noise_sigma}")
    check_seed(center_seed, "center_seed")
    check_seed(sample_seed, "sample_seed")

    feats = np.empty((n_per_class * n_classes, dim))
    for c in range(n_classes):
        direction = rng_from(center_seed, c).standard_normal(dim)
        center = center_scale * direction / np.linalg.norm(direction)
        noise = rng_from(sample_seed, c).standard_normal((n_per_class, dim))
        feats[c * n_per_class : (c + 1) * n_per_class] = center + noise_sigma * noise
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_per_class)
    return Dataset(feats, labels, default_label_names(n_classes))


def _as_fractions(fractions) -> tuple[float, float, float]:
    if isinstance(fractions, Mapping):
        try:
            parts = (fractions["train"], fractions["valid"], fractions["test"])
        except KeyError as e:
            raise ConfigError(f"fractions missing key {e.args[0]!r}") from None
    else:
        parts = tuple(fractions)
        if len(parts) != 3:
            raise ConfigError(f"fractions must have 3 entries, got {len(parts)}")
    if any(f <= 0 for f in parts):
        raise ConfigError(f"fractions must be positive, got {parts}")
    if abs(sum(parts) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(parts)!r}")
    return parts  # type: ignore[return-value]


def split_dataset(data: Dataset, fractions, seed: int, name: str = "") -> EventSplits:
    """Seeded shuffle then contiguous cut; floor sizes, remainder to train."""
    f_train, f_valid, f_test = _as_fractions(fractions)
    check_seed(seed)
    n = data.n
    n_train = int(f_train * n)
    n_valid = int(f_valid * n)
    n_test = int(f_test * n)
    n_train += n - (n_train + n_valid + n_test)
    for split_name, size in (("train", n_train), ("valid", n_valid), ("test", n_test)):
        if size < 1:
            raise ConfigError(f"{split_name} split is empty for N={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return EventSplits(
        name=name,
        train=data.take(perm[:n_train]),
        valid=data.take(perm[n_train : n_train + n_valid]),
        test=data.take(perm[n_train + n_valid :]),
    )


def batch_index_chunks(
    n: int, batch_size: int, epoch: int, seed: int
) -> list[np.ndarray]:
    """Index arrays for one epoch: a permutation keyed by (seed, epoch),
    cut into ceil(n / batch_size) chunks, the last possibly short."""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    perm = rng_from(seed, epoch).permutation(n)
    return [perm[i : i + batch_size] for i in range(0, n, batch_size)]


def batch_iter(
    data: Dataset, batch_size: int, epoch: int, seed: int
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffled minibatches; concatenation is a permutation of the
    dataset."""
    for idx in batch_index_chunks(data.n, batch_size, epoch, seed):
        yield data.features[idx], data.labels[idx]
