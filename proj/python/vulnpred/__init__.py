"""Python bindings for the vulnpred tabular pipeline.

JSON documents cross the native boundary as text; this module decodes them.
"""

import json

import numpy as np

from . import _vulnpred
from ._vulnpred import VulnpredError

__all__ = [
    "Classifier",
    "VulnpredError",
    "known_families",
    "paper_msft_preset",
    "report",
    "confusion",
    "roc_auc",
    "run",
    "validate_config",
]


def report(tp, fp, tn, fn):
    """Classification report for a binary confusion matrix (positive class 1)."""
    return json.loads(_vulnpred.report(tp, fp, tn, fn))


def confusion(y_true, y_pred):
    return json.loads(_vulnpred.confusion(list(y_true), list(y_pred)))


def roc_auc(y_true, scores):
    """Returns (auc, [(threshold, fpr, tpr), ...])."""
    return _vulnpred.roc_auc([int(v) for v in y_true], [float(v) for v in scores])


def validate_config(doc):
    """Returns (normalized config or None, [(path, message), ...])."""
    text, issues = _vulnpred.validate_config(json.dumps(doc))
    return (json.loads(text) if text else None), issues


def paper_msft_preset():
    return json.loads(_vulnpred.paper_msft_preset())


def run(doc):
    """Runs every stage; artifacts land in doc["output_dir"]. Returns the run report."""
    return json.loads(_vulnpred.run(json.dumps(doc)))


def known_families():
    return list(_vulnpred.known_families())


class Classifier:
    def __init__(self, family, **params):
        self._impl = _vulnpred.Classifier(family, json.dumps(params))

    @classmethod
    def from_json(cls, doc):
        obj = cls.__new__(cls)
        obj._impl = _vulnpred.Classifier.from_json(json.dumps(doc))
        return obj

    @property
    def family(self):
        return self._impl.family

    @property
    def params(self):
        return json.loads(self._impl.params)

    def fit(self, x, y):
        self._impl.fit(np.asarray(x, dtype=float), [int(v) for v in y])
        return self

    def predict_proba(self, x):
        return np.asarray(self._impl.predict_proba(np.asarray(x, dtype=float)))

    def predict(self, x):
        return (self.predict_proba(x) >= 0.5).astype(int)

    def feature_importance(self):
        return np.asarray(self._impl.feature_importance())

    def to_json(self):
        return json.loads(self._impl.to_json())
