"""Random forest of Gini-impurity decision trees for the shape classes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted, check_X_y

from ..domain import ShapeClass
from ..errors import DomainError

N_CLASSES = len(ShapeClass)


@dataclass
class Tree:
    """Flat binary tree. Leaves have ``feature == -1``.

    Samples go left when ``x[feature] <= threshold``. ``hist`` holds, per
    node, the class counts of the training samples that reached it.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    hist: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    def apply(self, X):
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return node
            go_left = X[rows, np.where(inner, feat, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)

    def votes(self, X):
        # argmax picks the lowest class on ties
        return np.argmax(self.hist[self.apply(X)], axis=1)


def gini(counts):
    n = counts.sum(axis=-1, keepdims=True)
    p = counts / np.where(n == 0, 1, n)
    return 1.0 - (p**2).sum(axis=-1)


def best_split(X, y, features, n_classes):
    """Lowest weighted Gini split over ``features``; None when nothing separates."""
    n = len(y)
    onehot = np.eye(n_classes)[y]
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if len(valid) == 0:
            continue
        left = np.cumsum(onehot[order], axis=0)[valid]
        right = onehot.sum(axis=0) - left
        nl = valid + 1.0
        score = (nl * gini(left) + (n - nl) * gini(right)) / n
        k = int(np.argmin(score))
        if best is None or score[k] < best[0]:
            best = (float(score[k]), int(f), float(xs[valid[k]]))
    return best


def grow_tree(X, y, max_depth, max_features, rng, n_classes=N_CLASSES, min_samples_split=2):
    feature, threshold, left, right, hist = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        hist.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = hist[node]
        if depth >= max_depth or len(idx) < min_samples_split or np.count_nonzero(counts) <= 1:
            continue
        feats = rng.choice(X.shape[1], size=max_features, replace=False)
        split = best_split(X[idx], y[idx], feats, n_classes)
        if split is None or split[0] >= gini(counts.astype(float)):
            continue
        _, f, thr = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(hist, dtype=np.int64).reshape(-1, n_classes),
    )


class GiniForestClassifier(ClassifierMixin, BaseEstimator):
    """Bagged decision trees with random feature subsets at each split.

    Each tree votes for the majority class of the leaf a sample lands in;
    the forest returns the most voted class, the lowest index on ties.
    Class labels are the integers ``0 .. n_classes - 1``.
    """

    def __init__(self, n_estimators=100, max_depth=12, max_features="sqrt", bootstrap=True,
                 n_classes=N_CLASSES, random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.n_classes = n_classes
        self.random_state = random_state

    def _n_split_features(self, d):
        if self.max_features == "sqrt":
            return min(d, math.ceil(math.sqrt(d)))
        if self.max_features is None:
            return d
        return min(d, int(self.max_features))

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if len(y) == 0:
            raise DomainError("no training data")
        y = y.astype(np.int64)
        if y.min() < 0 or y.max() >= self.n_classes:
            raise DomainError(f"class labels must lie in 0..{self.n_classes - 1}")
        m = self._n_split_features(X.shape[1])
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        self.trees_ = []
        for ss in seeds:
            rng = np.random.default_rng(ss)
            idx = rng.integers(0, len(y), size=len(y)) if self.bootstrap else np.arange(len(y))
            self.trees_.append(grow_tree(X[idx], y[idx], self.max_depth, m, rng, self.n_classes))
        self.classes_ = np.arange(self.n_classes)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_X(self, X):
        try:
            check_is_fitted(self, "trees_")
        except NotFittedError as exc:
            raise DomainError("forest has not been trained") from exc
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def vote_counts(self, X):
        X = self._check_X(X)
        counts = np.zeros((len(X), self.n_classes), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in self.trees_:
            np.add.at(counts, (rows, tree.votes(X)), 1)
        return counts

    def predict(self, X):
        return np.argmax(self.vote_counts(X), axis=1)

    def predict_proba(self, X):
        counts = self.vote_counts(X)
        return counts / counts.sum(axis=1, keepdims=True)


def forest_train(X, y, n_trees=100, max_depth=12, seed=0) -> GiniForestClassifier:
    if len(X) == 0:
        raise DomainError("no training data")
    return GiniForestClassifier(n_estimators=n_trees, max_depth=max_depth, random_state=seed).fit(X, y)


def forest_predict(model: GiniForestClassifier, x) -> ShapeClass:
    return ShapeClass(int(model.predict(np.asarray(x, dtype=float).reshape(1, -1))[0]))
