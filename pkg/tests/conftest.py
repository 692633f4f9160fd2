import itertools
import sys
import threading
from pathlib import Path

import numpy as np
import pytest
from sklearn.naive_bayes import GaussianNB

sys.path.insert(0, str(Path(__file__).parent))

from recstack.data import Dataset  # noqa: E402
from recstack.learners import LearnerPool, LearnerSpec, register_learner  # noqa: E402


class RowLog:
    """Records which row ids every fitted model trained on and predicted."""

    def __init__(self):
        self._lock = threading.Lock()
        self._tokens = itertools.count()
        self.fits = {}
        self.predictions = {}

    def new_token(self):
        with self._lock:
            return next(self._tokens)

    def record(self, table, token, ids):
        with self._lock:
            table.setdefault(token, []).append(frozenset(int(i) for i in ids))

    def clear(self):
        with self._lock:
            self.fits.clear()
            self.predictions.clear()

    def violations(self):
        bad = []
        for token, predicted in self.predictions.items():
            trained = self.fits[token][0]
            for ids in predicted:
                overlap = trained & ids
                if overlap:
                    bad.append((token, sorted(overlap)[:5]))
        return bad


ROW_LOG = RowLog()


class RowIdRecorder:
    """Gaussian NB on every column but the last; the last column holds row ids."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, X, y):
        self.token_ = ROW_LOG.new_token()
        ROW_LOG.record(ROW_LOG.fits, self.token_, X[:, -1])
        self.model_ = GaussianNB().fit(X[:, :-1], y)
        self.classes_ = self.model_.classes_
        return self

    def predict_proba(self, X):
        ROW_LOG.record(ROW_LOG.predictions, self.token_, X[:, -1])
        return self.model_.predict_proba(X[:, :-1])


@register_learner("row_id_recorder")
def _row_id_recorder(spec):
    return RowIdRecorder(random_state=spec.seed)


@pytest.fixture
def row_log():
    ROW_LOG.clear()
    yield ROW_LOG
    ROW_LOG.clear()


def instrumented_pool(size=3):
    return LearnerPool(tuple(LearnerSpec(f"probe{i}", "row_id_recorder", seed=i) for i in range(size)))


def with_row_ids(dataset: Dataset) -> Dataset:
    """Append a column holding each row's index as the last original feature."""
    X = dataset.features.values
    ids = np.arange(X.shape[0], dtype=float)[:, None]
    names = dataset.features.names + ["row_id"]
    return Dataset.from_arrays(np.hstack([X, ids]), dataset.labels, names)


def fast_pool(task="binary"):
    """Cheap learners for structural engine tests."""
    specs = [
        LearnerSpec("lr", "logistic_regression"),
        LearnerSpec("dt", "decision_tree", {"max_depth": 4}),
        LearnerSpec("knn", "knn"),
        LearnerSpec("gnb", "gaussian_nb"),
        LearnerSpec("rf", "random_forest", {"n_estimators": 10}),
    ]
    return LearnerPool(tuple(specs))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
