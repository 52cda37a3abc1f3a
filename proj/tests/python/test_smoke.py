import json
import os
from pathlib import Path

import pytest

import desmine

FIXTURES = Path(os.environ.get("DESMINE_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))


def small_dataset(n=60):
    rows = []
    for i in range(n):
        if i % 3 == 0:
            rows.append((f"d{i}", "split the parser into layers to decouple the interface design", 1))
        else:
            rows.append((f"n{i}", f"bump version {i} and fix typo in readme", 0))
    return desmine.Dataset("toy", rows)


def test_version_and_presets():
    assert desmine.__version__
    assert set(desmine.preset_names()) == {"brunet-strict", "brunet-stratified", "newbest", "newbest-alt"}


def test_load_fixture():
    ds = desmine.load_jsonl(str(FIXTURES / "snippets.jsonl"))
    assert len(ds) == 8
    assert ds.design_count == 5
    assert ds[0].id == "so-1"
    assert desmine.stats(ds)["total"] == 8


def test_csv_and_errors():
    ds = desmine.load_csv(str(FIXTURES / "two_rows.csv"))
    assert [d.label for d in (ds[0], ds[1])] == [1, 0]
    with pytest.raises(desmine.DataError):
        desmine.parse_jsonl('{"id": "a"}\n', "broken")
    with pytest.raises(ValueError):
        desmine.Dataset("bad", [("a", "text", 2)])


def test_text_helpers():
    assert desmine.tokenize(desmine.clean("Hello, World!")) == ["hello", "world"]


def test_metrics():
    assert desmine.roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75
    z = desmine.zeror_baseline(0.14)
    assert z["accuracy"] == 0.86
    assert z["balanced_accuracy"] == 0.5
    r = desmine.evaluate([1, 0], [0.9, 0.2], [1, 0])
    assert r["roc_auc"] == 1.0


def test_folds_and_smote():
    labels = [1] * 10 + [0] * 30
    folds = desmine.stratified_folds(labels, 5, 3)
    assert folds == desmine.stratified_folds(labels, 5, 3)
    assert all(sum(1 for f, y in zip(folds, labels) if f == k and y == 1) == 2 for k in range(5))
    X = [[float(i), float(i % 3)] for i in range(40)]
    Xs, ys = desmine.smote(X, labels, k_neighbors=3, target_ratio=1.0, seed=1)
    assert len(Xs) == 60
    assert sum(ys) == 30


def test_fit_predict():
    X = [[-1.0], [1.0], [-2.0], [2.0]]
    y = [0, 1, 0, 1]
    scores = desmine.fit_predict("logistic_regression", X, y, [[-3.0], [3.0]])
    assert scores[0] < 0.5 < scores[1]
    nb = desmine.fit_predict({"algorithm": "naive_bayes"}, [[1, 0], [0, 1]], [1, 0], [[1, 0]])
    assert nb[0] > 0.5


def test_protocol_roundtrip_and_execute():
    spec = desmine.resolve_protocol("newbest-alt")
    assert spec["name"] == "newbest-alt"
    assert desmine.render_dot("brunet-strict").startswith("digraph")
    spec["validation"] = {"type": "kfold", "k": 3}
    first = desmine.execute(spec, small_dataset())
    second = desmine.execute(first["spec"], small_dataset())
    assert first["report"] == second["report"]
    assert first["report"]["roc_auc"] > 0.9


def test_transfer_csv():
    spec = desmine.resolve_protocol("newbest-alt")
    spec["validation"] = {"type": "kfold", "k": 3}
    other = desmine.Dataset("toy2", [(d.id, d.text, d.label) for d in (small_dataset()[i] for i in range(60))])
    csv = desmine.transfer_csv(json.dumps(spec), [small_dataset(), other], 1)
    lines = csv.strip().splitlines()
    assert len(lines) == 3
    assert lines[0].split(",")[1:] == ["toy", "toy2"]
