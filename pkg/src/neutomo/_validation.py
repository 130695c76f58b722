"""Input validation shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d


def check_pairs(X, n_nodes=None, allow_empty=False):
    """Validate an ``(n_samples, 2)`` array of node ids with distinct endpoints."""
    X = np.asarray(X)
    if X.size == 0 and allow_empty:
        return np.zeros((0, 2), dtype=np.int64)
    X = check_array(X, dtype=None, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"node pairs must have 2 columns, got {X.shape[1]}")
    if not np.issubdtype(X.dtype, np.integer):
        as_int = X.astype(np.int64)
        if not np.array_equal(as_int, X):
            raise ValueError("node ids must be integers")
        X = as_int
    X = X.astype(np.int64, copy=False)
    if (X[:, 0] == X[:, 1]).any():
        bad = X[X[:, 0] == X[:, 1]][0]
        raise ValueError(f"pair {tuple(bad)} has identical endpoints")
    if (X < 0).any():
        raise ValueError("node ids must be non-negative")
    if n_nodes is not None and (X >= n_nodes).any():
        raise ValueError(f"node id {int(X.max())} out of range for n_nodes={n_nodes}")
    return X


def check_targets(y, n_samples, positive=False):
    y = column_or_1d(np.asarray(y, dtype=float), warn=True)
    if len(y) != n_samples:
        raise ValueError(f"got {len(y)} targets for {n_samples} pairs")
    if not np.isfinite(y).all():
        raise ValueError("targets must be finite")
    if positive and (y <= 0).any():
        raise ValueError("path metrics must be positive")
    return y


def canonical_pairs(X):
    """Sort each pair so the smaller id comes first."""
    X = np.asarray(X, dtype=np.int64)
    return np.sort(X, axis=1)
