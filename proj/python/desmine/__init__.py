"""Design-discussion mining: protocols, classifiers and cross-dataset evaluation."""

import json

from . import _core
from ._core import (
    DataError,
    Dataset,
    Discussion,
    clean,
    load_csv,
    load_jsonl,
    parse_jsonl,
    preset_names,
    render_dot,
    roc_auc,
    smote,
    stats,
    stratified_folds,
    tokenize,
    transfer_csv,
)

__version__ = _core.__version__


def _protocol_arg(protocol):
    if isinstance(protocol, dict):
        return json.dumps(protocol)
    return protocol


def resolve_protocol(protocol):
    """Fully resolved protocol as a dict; accepts a preset name, a path or a dict."""
    return json.loads(_core.resolve_protocol(_protocol_arg(protocol)))


def execute(protocol, dataset):
    """Run a protocol on a dataset and return the result as a dict."""
    return json.loads(_core.execute(_protocol_arg(protocol), dataset))


def evaluate(labels, scores, predictions):
    return json.loads(_core.evaluate(labels, scores, predictions))


def zeror_baseline(prevalence):
    return json.loads(_core.zeror_baseline(prevalence))


def fit_predict(classifier, X_train, y_train, X_test):
    """Fit a classifier (name or spec dict) and score X_test."""
    return _core.fit_predict(json.dumps(classifier), X_train, y_train, X_test)


__all__ = [
    "DataError",
    "Dataset",
    "Discussion",
    "clean",
    "evaluate",
    "execute",
    "fit_predict",
    "load_csv",
    "load_jsonl",
    "parse_jsonl",
    "preset_names",
    "render_dot",
    "resolve_protocol",
    "roc_auc",
    "smote",
    "stats",
    "stratified_folds",
    "tokenize",
    "transfer_csv",
    "zeror_baseline",
]
