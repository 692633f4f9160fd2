"""Probabilistic base learners behind one fit / predict-probability surface.

The pool covers the usual tabular families (linear, single tree, bagged and
boosted trees, nearest neighbours, naive Bayes, a small neural net).  Most
kinds are thin wrappers around scikit-learn estimators; the single decision
tree and the MLP are implemented here because their probability outputs
need specific behaviour (Laplace-smoothed leaves, fixed-step full-batch
training).

New kinds can be plugged in with :func:`register_learner`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np
from sklearn.ensemble import (
    AdaBoostClassifier,
    BaggingClassifier,
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from . import _nn
from .data import Task, as_array
from .errors import DegenerateTraining, NonFiniteInput, WidthMismatch

_BUILDERS: Dict[str, Callable[["LearnerSpec"], Any]] = {}

# key -> (lower bound, strict?)
_POSITIVE_PARAMS = {
    "n_estimators": (1, False),
    "n_neighbors": (1, False),
    "hidden": (1, False),
    "epochs": (1, False),
    "max_depth": (1, False),
    "learning_rate": (0, True),
    "step": (0, True),
    "C": (0, True),
    "max_iter": (1, False),
    "var_smoothing": (0, False),
}


@dataclass(frozen=True)
class LearnerSpec:
    id: str
    kind: str
    hyperparams: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _BUILDERS:
            raise ValueError(f"unknown learner kind {self.kind!r}; known: {sorted(_BUILDERS)}")
        for key, value in self.hyperparams.items():
            if key not in _POSITIVE_PARAMS or value is None:
                continue
            low, strict = _POSITIVE_PARAMS[key]
            if value < low or (strict and value == low):
                op = ">" if strict else ">="
                raise ValueError(f"{self.id}: {key} must be {op} {low}, got {value}")


@dataclass(frozen=True)
class LearnerPool:
    specs: tuple

    def __post_init__(self):
        specs = tuple(self.specs)
        if not specs:
            raise ValueError("a learner pool needs at least one spec")
        ids = [s.id for s in specs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate learner ids in pool: {ids}")
        object.__setattr__(self, "specs", specs)

    @property
    def ids(self) -> list:
        return [s.id for s in self.specs]

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def subset(self, ids) -> "LearnerPool":
        """Keep the specs named in ``ids``, preserving pool order."""
        keep = set(ids)
        return LearnerPool(tuple(s for s in self.specs if s.id in keep))


def register_learner(kind: str):
    """Register ``builder(spec) -> estimator`` for a learner kind.

    The estimator needs scikit-learn style ``fit(X, y)``,
    ``predict_proba(X)`` and a ``classes_`` attribute after fitting.
    """

    def decorator(builder):
        _BUILDERS[kind] = builder
        return builder

    return decorator


def learner_kinds() -> list:
    return sorted(_BUILDERS)


@dataclass(frozen=True)
class TrainedModel:
    spec: LearnerSpec
    estimator: Any
    class_count: int
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)


def fit(spec: LearnerSpec, X, y, class_count: Optional[int] = None) -> TrainedModel:
    """Fit a fresh estimator for ``spec`` on ``(X, y)``.

    ``class_count`` fixes the width of later probability outputs; it defaults
    to ``max(y) + 1``.  Classes absent from ``y`` get probability zero.
    """
    X = as_array(X)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise WidthMismatch(f"X has shape {X.shape} but y has {y.shape[0]} entries")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput(f"{spec.id}: training matrix contains NaN or Inf")
    if np.unique(y).size < 2:
        raise DegenerateTraining(f"{spec.id}: training labels contain a single class")
    if class_count is None:
        class_count = int(y.max()) + 1

    estimator = _BUILDERS[spec.kind](spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        estimator.fit(X, y)
    return TrainedModel(spec=spec, estimator=estimator, class_count=class_count, n_features=X.shape[1])


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    X = as_array(X)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise WidthMismatch(
            f"{model.spec.id} was trained on {model.n_features} columns, got {X.shape}"
        )
    raw = np.asarray(model.estimator.predict_proba(X), dtype=np.float64)
    proba = np.zeros((X.shape[0], model.class_count))
    proba[:, np.asarray(model.estimator.classes_, dtype=np.int64)] = raw
    proba = np.clip(np.nan_to_num(proba, nan=0.0), 0.0, 1.0)
    total = proba.sum(axis=1, keepdims=True)
    bad = total[:, 0] <= 0
    if bad.any():
        proba[bad] = 1.0
        total[bad] = model.class_count
    return proba / total


# -- in-repo estimators -------------------------------------------------------


class LaplaceTree:
    """Decision tree whose leaves report ``(count_c + 1) / (n_leaf + C)``."""

    def __init__(self, max_depth=None, random_state=None):
        self.max_depth = max_depth
        self.random_state = random_state

    def fit(self, X, y):
        self.tree_ = DecisionTreeClassifier(max_depth=self.max_depth, random_state=self.random_state)
        self.tree_.fit(X, y)
        self.classes_ = self.tree_.classes_
        leaves = self.tree_.apply(X)
        codes = np.searchsorted(self.classes_, y)
        counts = np.zeros((self.tree_.tree_.node_count, self.classes_.size))
        np.add.at(counts, (leaves, codes), 1.0)
        self.leaf_proba_ = (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + self.classes_.size)
        return self

    def predict_proba(self, X):
        return self.leaf_proba_[self.tree_.apply(X)]


class SimpleMLP:
    """One hidden tanh layer, sigmoid (binary) or softmax output.

    Trained by full-batch gradient descent with a fixed step for a fixed
    number of epochs on standardised inputs.
    """

    def __init__(self, hidden=32, epochs=200, step=0.5, random_state=0):
        self.hidden = hidden
        self.epochs = epochs
        self.step = step
        self.random_state = random_state

    def fit(self, X, y):
        rng = np.random.default_rng(self.random_state)
        self.classes_ = np.unique(y)
        codes = np.searchsorted(self.classes_, y)
        self.scaler_ = _nn.Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        n, d = Z.shape
        n_out = 1 if self.classes_.size == 2 else self.classes_.size
        target = codes[:, None].astype(float) if n_out == 1 else _nn.one_hot(codes, n_out)

        self.W1_ = _nn.glorot(rng, d, self.hidden)
        self.b1_ = np.zeros(self.hidden)
        self.W2_ = _nn.glorot(rng, self.hidden, n_out)
        self.b2_ = np.zeros(n_out)
        for _ in range(self.epochs):
            H = np.tanh(Z @ self.W1_ + self.b1_)
            out = self._output(H @ self.W2_ + self.b2_)
            # sigmoid+BCE and softmax+CE share the same output gradient
            g_out = (out - target) / n
            g_H = (g_out @ self.W2_.T) * (1.0 - H * H)
            self.W2_ -= self.step * (H.T @ g_out)
            self.b2_ -= self.step * g_out.sum(axis=0)
            self.W1_ -= self.step * (Z.T @ g_H)
            self.b1_ -= self.step * g_H.sum(axis=0)
        return self

    def _output(self, logits):
        if logits.shape[1] == 1:
            return _nn.sigmoid(logits)
        return _nn.softmax(logits)

    def predict_proba(self, X):
        H = np.tanh(self.scaler_.transform(X) @ self.W1_ + self.b1_)
        out = self._output(H @ self.W2_ + self.b2_)
        if out.shape[1] == 1:
            return np.hstack([1.0 - out, out])
        return out


# -- builders -----------------------------------------------------------------


def _params(spec, **defaults):
    merged = dict(defaults)
    merged.update(spec.hyperparams)
    return merged


@register_learner("logistic_regression")
def _logistic(spec):
    return LogisticRegression(**_params(spec, C=1.0, max_iter=1000), random_state=spec.seed)


@register_learner("decision_tree")
def _decision_tree(spec):
    return LaplaceTree(**_params(spec, max_depth=None), random_state=spec.seed)


@register_learner("random_forest")
def _random_forest(spec):
    return RandomForestClassifier(
        **_params(spec, n_estimators=50, max_features="sqrt"), random_state=spec.seed
    )


@register_learner("extra_trees")
def _extra_trees(spec):
    return ExtraTreesClassifier(
        **_params(spec, n_estimators=50, max_features="sqrt"), random_state=spec.seed
    )


@register_learner("bagging")
def _bagging(spec):
    return BaggingClassifier(**_params(spec, n_estimators=10), random_state=spec.seed)


@register_learner("adaboost")
def _adaboost(spec):
    # scikit-learn >= 1.6 always runs the SAMME scheme
    return AdaBoostClassifier(
        **_params(spec, n_estimators=50, learning_rate=1.0), random_state=spec.seed
    )


@register_learner("gradient_boosting")
def _gradient_boosting(spec):
    return GradientBoostingClassifier(
        **_params(spec, n_estimators=50, learning_rate=0.1, max_depth=3), random_state=spec.seed
    )


@register_learner("knn")
def _knn(spec):
    return KNeighborsClassifier(**_params(spec, n_neighbors=5))


@register_learner("gaussian_nb")
def _gaussian_nb(spec):
    return GaussianNB(**_params(spec, var_smoothing=1e-9))


@register_learner("mlp")
def _mlp(spec):
    return SimpleMLP(**_params(spec, hidden=32, epochs=200, step=0.5), random_state=spec.seed)


_DEFAULT_BINARY = (
    ("lr", "logistic_regression"),
    ("dt", "decision_tree"),
    ("rf", "random_forest"),
    ("et", "extra_trees"),
    ("bag", "bagging"),
    ("ada", "adaboost"),
    ("gb", "gradient_boosting"),
    ("knn", "knn"),
    ("gnb", "gaussian_nb"),
    ("mlp", "mlp"),
)

# the two slowest kinds on multi-class problems
_MULTICLASS_EXCLUDED = {"gb", "ada"}


def default_pool(task, seed: int = 0) -> LearnerPool:
    """Ten learners for binary tasks, eight for multi-class.

    Hyperparameters are the builder defaults above.  Multi-class drops
    gradient boosting (one tree per class per round) and AdaBoost, the two
    slowest fits once the class count grows.
    """
    task = Task(task)
    entries = _DEFAULT_BINARY
    if task is Task.MULTICLASS:
        entries = tuple(e for e in entries if e[0] not in _MULTICLASS_EXCLUDED)
    return LearnerPool(tuple(LearnerSpec(id=i, kind=k, seed=seed) for i, k in entries))
