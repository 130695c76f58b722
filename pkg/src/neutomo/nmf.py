"""Masked non-negative matrix factorisation as a matrix-completion baseline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_pairs, check_targets

_EPS = 1e-12


def _objective(X, mask, W, H):
    r = mask * (X - W @ H)
    return float(np.sum(r * r))


def masked_nmf(X, mask, rank, max_iters=2000, tol=1e-6, random_state=0):
    """Fit ``X ~ W @ H`` on the entries where ``mask`` is 1.

    Weighted multiplicative updates (Lee-Seung with a binary weight
    matrix). Each update cannot raise the masked Frobenius objective; if
    round-off makes one appear to, the previous factors are kept and
    iteration stops, so the returned history is non-increasing.

    Returns ``W, H, history`` where ``history[t]`` is the objective after
    ``t`` sweeps.
    """
    X = np.asarray(X, dtype=float)
    mask = np.asarray(mask, dtype=float)
    if X.shape != mask.shape:
        raise ValueError("X and mask differ in shape")
    if (X[mask > 0] < 0).any():
        raise ValueError("NMF needs non-negative observations")
    X = np.where(mask > 0, X, 0.0)
    rng = np.random.default_rng(random_state)
    rows, cols = X.shape
    observed = X[mask > 0]
    scale = np.sqrt(observed.mean() / rank) if observed.size else 1.0
    W = rng.uniform(0.5, 1.5, size=(rows, rank)) * scale
    H = rng.uniform(0.5, 1.5, size=(rank, cols)) * scale
    MX = mask * X
    history = [_objective(X, mask, W, H)]
    for _ in range(max_iters):
        W_new = W * (MX @ H.T) / ((mask * (W @ H)) @ H.T + _EPS)
        H_new = H * (W_new.T @ MX) / (W_new.T @ (mask * (W_new @ H)) + _EPS)
        obj = _objective(X, mask, W_new, H_new)
        if obj > history[-1]:
            break
        W, H = W_new, H_new
        prev = history[-1]
        history.append(obj)
        if prev == 0 or (prev - obj) <= tol * prev:
            break
    return W, H, np.array(history)


class MaskedNMFCompleter(RegressorMixin, BaseEstimator):
    """Complete the symmetric pair-metric matrix from measured pairs.

    Parameters
    ----------
    n_nodes : int, optional
    rank : int, default=16
        Must be smaller than ``n_nodes``.
    max_iters : int, default=2000
    tol : float, default=1e-6
        Relative objective decrease below which iteration stops.
    random_state : int, default=0
    """

    def __init__(self, n_nodes=None, rank=16, max_iters=2000, tol=1e-6, random_state=0):
        self.n_nodes = n_nodes
        self.rank = rank
        self.max_iters = max_iters
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X = check_pairs(X, self.n_nodes)
        y = check_targets(y, len(X))
        if (y < 0).any():
            raise ValueError("NMF needs non-negative path metrics")
        n = self.n_nodes if self.n_nodes is not None else int(X.max()) + 1
        if not 1 <= self.rank < n:
            raise ValueError(f"rank must satisfy 1 <= rank < n_nodes ({n}), got {self.rank}")
        M = np.zeros((n, n))
        mask = np.zeros((n, n))
        M[X[:, 0], X[:, 1]] = M[X[:, 1], X[:, 0]] = y
        mask[X[:, 0], X[:, 1]] = mask[X[:, 1], X[:, 0]] = 1.0
        W, H, history = masked_nmf(M, mask, self.rank, self.max_iters, self.tol, self.random_state)
        full = W @ H
        self.n_nodes_ = n
        self.components_ = H
        self.loadings_ = W
        self.completed_ = 0.5 * (full + full.T)
        self.objective_history_ = history
        self.n_iter_ = len(history) - 1
        return self

    def predict(self, X):
        check_is_fitted(self, "completed_")
        X = check_pairs(X, self.n_nodes_, allow_empty=True)
        return self.completed_[X[:, 0], X[:, 1]] if len(X) else np.zeros(0)
