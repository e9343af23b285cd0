import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedcl.data import Dataset
from fedcl.errors import ConfigError, DataError
from fedcl.metrics import (
    CSV_HEADER,
    EvalRecord,
    cumulative_mean,
    evaluate,
    forgetting,
    read_metrics_csv,
    write_metrics,
)
from fedcl.nn import Layer, ModelParams

from helpers import naive_forward_logits, random_params


def zero_model(dims):
    return ModelParams(
        tuple(Layer(np.zeros((fi, fo)), np.zeros(fo)) for fi, fo in zip(dims[:-1], dims[1:]))
    )


# ------------------------------------------------------------------- evaluate


def test_evaluate_uniform_predictor_tie_breaks_to_class_zero():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 10, size=40)
    data = Dataset(rng.standard_normal((40, 6)), labels)
    res = evaluate(zero_model([6, 4, 10]), data)
    assert res.loss == pytest.approx(math.log(10.0), rel=1e-12)
    assert res.accuracy == pytest.approx((labels == 0).mean())


def test_evaluate_perfect_onehot_model():
    # identity layers turn a scaled one-hot feature row into logits that
    # peak at the true label
    n_classes = 4
    labels = np.array([0, 1, 2, 3, 2, 1])
    feats = 5.0 * np.eye(n_classes)[labels]
    data = Dataset(feats, labels, tuple(f"c{i}" for i in range(n_classes)))
    model = ModelParams((Layer(np.eye(4), np.zeros(4)), Layer(np.eye(4), np.zeros(4))))
    assert evaluate(model, data).accuracy == 1.0


def test_evaluate_matches_per_row_argmax_oracle():
    rng = np.random.default_rng(1)
    model = random_params(rng, [5, 7, 6])
    labels = rng.integers(0, 6, size=20)
    data = Dataset(rng.standard_normal((20, 5)), labels, tuple(f"c{i}" for i in range(6)))

    logits = naive_forward_logits(model, data.features)
    correct = 0
    for i in range(20):
        best = 0
        for j in range(1, 6):
            if logits[i, j] > logits[i, best]:  # strict: ties keep lowest index
                best = j
        correct += best == labels[i]
    assert evaluate(model, data).accuracy == correct / 20


# ----------------------------------------------------------------- forgetting


def test_forgetting_no_drop():
    assert forgetting([[0.9], [0.9, 0.8]]) == pytest.approx(0.0, abs=1e-12)


def test_forgetting_hand_case():
    assert forgetting([[0.9], [0.5, 0.8]]) == pytest.approx(0.4, rel=1e-12)


def test_forgetting_matches_direct_recomputation():
    rng = np.random.default_rng(2)
    m = rng.uniform(0, 1, size=(3, 3)).tolist()
    expected = np.mean(
        [max(m[i][j] for i in range(j, 3)) - m[2][j] for j in range(2)]
    )
    assert forgetting(m) == pytest.approx(expected, rel=1e-12)


def test_forgetting_requires_two_events():
    with pytest.raises(ConfigError, match="2"):
        forgetting([[0.9]])


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_forgetting_is_non_negative(n, seed):
    m = np.random.default_rng(seed).uniform(0, 1, size=(n, n)).tolist()
    assert forgetting(m) >= 0.0


# ------------------------------------------------------------ cumulative_mean


def test_cumulative_mean_single_event():
    assert cumulative_mean([[0.8]], 1) == pytest.approx(0.8)


def test_cumulative_mean_hand_case():
    m = [[0.5], [0.4, 0.9], [0.6, 0.7, 0.8]]
    assert cumulative_mean(m, 3) == pytest.approx(0.7, rel=1e-12)


def test_cumulative_mean_matches_recomputation():
    rng = np.random.default_rng(4)
    m = rng.uniform(0, 1, size=(4, 4)).tolist()
    for upto in (1, 2, 3, 4):
        assert cumulative_mean(m, upto) == pytest.approx(np.mean(m[upto - 1][:upto]))


def test_cumulative_mean_validation():
    with pytest.raises(ConfigError, match="upto"):
        cumulative_mean([[0.5]], 0)
    with pytest.raises(ConfigError):
        cumulative_mean([[0.5]], 2)


# --------------------------------------------------------------------- export


def make_records():
    return [
        EvalRecord(0, 3, -1, "valid", 0, 1.23456789123, 0.5),
        EvalRecord(1, -1, 7, "train", 1, 0.000123456789, 0.987654321987),
        EvalRecord(1, -1, 7, "test", 0, 2.5, 1.0),
    ]


def test_export_empty_log_is_header_only(tmp_path):
    path = tmp_path / "m.csv"
    write_metrics([], path, "csv")
    assert path.read_text(encoding="utf-8") == CSV_HEADER + "\n"


def test_export_single_record_two_lines(tmp_path):
    path = tmp_path / "m.csv"
    write_metrics(make_records()[:1], path, "csv")
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    assert len(lines) == 2
    assert lines[0] == CSV_HEADER


def test_export_round_trip_preserves_records(tmp_path):
    path = tmp_path / "m.csv"
    records = make_records()
    write_metrics(records, path, "csv")
    back = read_metrics_csv(path)
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert (a.event, a.round, a.epoch, a.split, a.target_event) == (
            b.event, b.round, b.epoch, b.split, b.target_event,
        )
        assert b.loss == pytest.approx(a.loss, rel=1e-8)
        assert b.accuracy == pytest.approx(a.accuracy, rel=1e-8)


def test_export_json(tmp_path):
    path = tmp_path / "m.json"
    write_metrics(make_records(), path, "json")
    rows = json.loads(path.read_text(encoding="utf-8"))
    assert len(rows) == 3
    assert rows[0]["split"] == "valid"
    assert rows[1]["accuracy"] == pytest.approx(0.987654321987, rel=1e-8)


def test_export_rejects_unknown_format(tmp_path):
    with pytest.raises(ConfigError, match="format"):
        write_metrics([], tmp_path / "m.xml", "xml")


def test_record_validation():
    with pytest.raises(ConfigError, match="split"):
        EvalRecord(0, 0, 0, "eval", 0, 0.5, 0.5)
    with pytest.raises(DataError, match="accuracy"):
        EvalRecord(0, 0, 0, "test", 0, 0.5, 1.5)
    with pytest.raises(DataError, match="loss"):
        EvalRecord(0, 0, 0, "test", 0, -0.5, 0.5)
