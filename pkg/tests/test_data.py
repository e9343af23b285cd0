import numpy as np
import pytest

from fedcl.data import (
    Dataset,
    HUMAID_LABEL_NAMES,
    batch_index_chunks,
    batch_iter,
    load_embedding_csv,
    split_dataset,
    synth_gaussian,
    write_embedding_csv,
)
from fedcl.errors import ConfigError, DataError, FormatError


# ------------------------------------------------------------------ Dataset


def test_dataset_defaults_to_humaid_labels():
    ds = Dataset(np.zeros((2, 3)), np.array([0, 9]))
    assert ds.n_classes == 10
    assert ds.label_names == HUMAID_LABEL_NAMES
    assert ds.label_names[0] == "caution and advice"
    assert ds.label_names[9] == "sympathy and support"


def test_dataset_rejects_bad_label():
    with pytest.raises(DataError, match="row 1"):
        Dataset(np.zeros((2, 3)), np.array([0, 10]))


def test_dataset_rejects_empty():
    with pytest.raises(DataError, match="empty"):
        Dataset(np.zeros((0, 3)), np.zeros(0, dtype=int))


def test_dataset_rejects_non_finite():
    feats = np.zeros((2, 3))
    feats[1, 2] = np.nan
    with pytest.raises(DataError, match="row 1, column 2"):
        Dataset(feats, np.array([0, 1]))


# ------------------------------------------------------------- CSV round trip


def test_load_minimal_csv(tmp_path):
    path = tmp_path / "mini.csv"
    path.write_text(
        "# n_classes=10\nlabel,e0,e1,e2\n3,0.5,-1.25,2\n7,1,2,3\n", encoding="utf-8"
    )
    ds = load_embedding_csv(path)
    assert ds.n == 2 and ds.dim == 3
    assert list(ds.labels) == [3, 7]
    assert ds.features[0, 1] == -1.25


def test_load_rejects_out_of_range_label(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# n_classes=10\nlabel,e0\n10,0.5\n", encoding="utf-8")
    with pytest.raises(DataError, match="row 0.*label 10"):
        load_embedding_csv(path)


def test_load_rejects_malformed_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# a comment\nlabll,e0,e1\n0,1,2\n", encoding="utf-8")
    with pytest.raises(FormatError, match="line 2"):
        load_embedding_csv(path)


def test_load_rejects_non_consecutive_embedding_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,e0,e2\n0,1,2\n", encoding="utf-8")
    with pytest.raises(FormatError, match="line 1"):
        load_embedding_csv(path)


def test_load_rejects_non_numeric_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,e0,e1\n0,1.5,oops\n", encoding="utf-8")
    with pytest.raises(DataError, match=r"row 0 \(line 2\), column 2"):
        load_embedding_csv(path)


def test_load_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,e0,e1\n0,1,2\n1,3\n", encoding="utf-8")
    with pytest.raises(FormatError, match="line 3"):
        load_embedding_csv(path)


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    ds = Dataset(rng.standard_normal((20, 7)) * 1e3, rng.integers(0, 10, 20))
    path = tmp_path / "roundtrip.csv"
    write_embedding_csv(ds, path)
    back = load_embedding_csv(path)
    assert np.array_equal(ds.features, back.features)
    assert np.array_equal(ds.labels, back.labels)
    assert back.label_names == ds.label_names


def test_csv_round_trip_custom_class_count(tmp_path):
    ds = Dataset(np.ones((3, 2)), np.array([0, 1, 2]), ("a", "b", "c"))
    path = tmp_path / "k3.csv"
    write_embedding_csv(ds, path)
    back = load_embedding_csv(path)
    assert back.n_classes == 3


# ------------------------------------------------------------- synth_gaussian


def test_synth_zero_noise_collapses_to_centers():
    ds = synth_gaussian(5, 3, 8, center_scale=2.0, noise_sigma=0.0, center_seed=1, sample_seed=2)
    for c in range(3):
        rows = ds.features[ds.labels == c]
        assert np.all(rows == rows[0])
        assert np.linalg.norm(rows[0]) == pytest.approx(2.0, rel=1e-12)


def test_synth_deterministic():
    a = synth_gaussian(4, 2, 5, 1.0, 0.5, center_seed=10, sample_seed=20)
    b = synth_gaussian(4, 2, 5, 1.0, 0.5, center_seed=10, sample_seed=20)
    assert np.array_equal(a.features, b.features)
    c = synth_gaussian(4, 2, 5, 1.0, 0.5, center_seed=10, sample_seed=21)
    assert not np.array_equal(a.features, c.features)


def test_synth_well_separated_clusters_pass_nearest_centroid_oracle():
    ds = synth_gaussian(50, 10, 16, center_scale=10.0, noise_sigma=1.0,
                        center_seed=5, sample_seed=6)
    centroids = np.stack([ds.features[ds.labels == c].mean(axis=0) for c in range(10)])
    dists = ((ds.features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    preds = dists.argmin(axis=1)
    assert (preds == ds.labels).mean() >= 0.99


def test_synth_validation():
    with pytest.raises(ConfigError):
        synth_gaussian(0, 2, 3, 1.0, 1.0, 0, 0)
    with pytest.raises(ConfigError, match="noise_sigma"):
        synth_gaussian(1, 2, 3, 1.0, -0.1, 0, 0)


# -------------------------------------------------------------- split_dataset


def test_split_exact_division():
    ds = Dataset(np.arange(300).reshape(100, 3).astype(float), np.zeros(100, dtype=int))
    splits = split_dataset(ds, (0.7, 0.1, 0.2), seed=0)
    assert (splits.train.n, splits.valid.n, splits.test.n) == (70, 10, 20)


def test_split_rejects_empty_split():
    ds = Dataset(np.zeros((7, 2)), np.zeros(7, dtype=int))
    with pytest.raises(ConfigError, match="valid"):
        split_dataset(ds, (0.7, 0.1, 0.2), seed=0)


def test_split_partition_property():
    rng = np.random.default_rng(1)
    ds = Dataset(np.arange(53, dtype=float).reshape(53, 1), rng.integers(0, 10, 53))
    splits = split_dataset(ds, {"train": 0.6, "valid": 0.2, "test": 0.2}, seed=9)
    merged = np.concatenate(
        [splits.train.features, splits.valid.features, splits.test.features]
    ).ravel()
    assert sorted(merged.tolist()) == list(range(53))


def test_split_fraction_validation():
    ds = Dataset(np.zeros((10, 2)), np.zeros(10, dtype=int))
    with pytest.raises(ConfigError, match="sum to 1"):
        split_dataset(ds, (0.5, 0.2, 0.2), seed=0)
    with pytest.raises(ConfigError, match="positive"):
        split_dataset(ds, (1.2, -0.1, -0.1), seed=0)


# ----------------------------------------------------------------- batch_iter


def test_batch_iter_tail_batch():
    ds = Dataset(np.arange(10, dtype=float).reshape(5, 2), np.zeros(5, dtype=int))
    sizes = [len(labels) for _, labels in batch_iter(ds, 2, epoch=0, seed=0)]
    assert sizes == [2, 2, 1]


def test_batch_iter_deterministic():
    ds = Dataset(np.arange(24, dtype=float).reshape(12, 2), np.zeros(12, dtype=int))
    a = [feats.copy() for feats, _ in batch_iter(ds, 5, epoch=3, seed=11)]
    b = [feats.copy() for feats, _ in batch_iter(ds, 5, epoch=3, seed=11)]
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_batch_iter_epochs_reshuffle():
    perm0 = np.concatenate(batch_index_chunks(1000, 64, epoch=0, seed=4))
    perm1 = np.concatenate(batch_index_chunks(1000, 64, epoch=1, seed=4))
    assert not np.array_equal(perm0, perm1)


def test_batch_iter_concatenation_is_permutation():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(1, 200))
        batch_size = int(rng.integers(1, 50))
        seed = int(rng.integers(0, 2**32))
        chunks = batch_index_chunks(n, batch_size, epoch=int(rng.integers(0, 5)), seed=seed)
        assert len(chunks) == -(-n // batch_size)
        combined = np.concatenate(chunks)
        assert np.array_equal(np.sort(combined), np.arange(n))


def test_batch_iter_validation():
    with pytest.raises(ConfigError, match="batch_size"):
        batch_index_chunks(5, 0, 0, 0)
