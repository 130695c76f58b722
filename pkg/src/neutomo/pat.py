"""Path-augmented training: best-path bounds on the measurement graph as extra data.

Measured pairs form a weighted graph. For every unmeasured pair the best
path on that graph (least sum for additive metrics, least bottleneck for
congestion) gives a first estimate. Training then alternates between
fitting the network on the measurements plus a random slice of estimated
pairs and blending the network's predictions back into the estimates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_is_fitted

from ._validation import canonical_pairs, check_pairs, check_targets
from .neural import PathMetricRegressor
from .routing import _dijkstra, all_pairs, pair_index
from .sampling import MeasurementSet
from .topology import MetricSemantics, Topology, topology_from_edges


@dataclass(frozen=True)
class MeasurementGraph:
    """Measured pairs as edges weighted by their measured metric."""

    graph: Topology
    component: np.ndarray  # component label per node

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass
class EstimateTable:
    """Current estimate per unmeasured pair; NaN where the pair is unreachable in the measurement graph."""

    pairs: np.ndarray
    values: np.ndarray
    reachable: np.ndarray

    def provenance(self) -> np.ndarray:
        return np.where(self.reachable, "pat", "model")

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "predicted", "provenance"])
            for (u, v), val, src in zip(self.pairs, self.values, self.provenance()):
                w.writerow([int(u), int(v), repr(float(val)), src])


def build_measurement_graph(ms_or_pairs, values=None, n=None) -> MeasurementGraph:
    """Graph on all ``n`` nodes with one edge per measured pair.

    Accepts a :class:`MeasurementSet` or explicit ``(pairs, values, n)``.
    """
    if isinstance(ms_or_pairs, MeasurementSet):
        pairs, values, n = ms_or_pairs.measured_pairs, ms_or_pairs.measured_values, ms_or_pairs.n
    else:
        pairs = np.asarray(ms_or_pairs)
        if n is None:
            n = int(pairs.max()) + 1
    graph = topology_from_edges(n, [tuple(p) for p in pairs], [float(v) for v in values])
    component = np.empty(n, dtype=np.int64)
    for label, nodes in enumerate(graph.components()):
        component[nodes] = label
    return MeasurementGraph(graph, component)


def initial_estimates(g_prime: MeasurementGraph, semantics, unmeasured_pairs) -> EstimateTable:
    """Best-path value on the measurement graph for each unmeasured pair."""
    semantics = MetricSemantics(semantics)
    pairs = canonical_pairs(np.asarray(unmeasured_pairs, dtype=np.int64).reshape(-1, 2))
    values = np.full(len(pairs), np.nan)
    adj = g_prime.graph.adjacency()
    cache = {}
    for k, (u, v) in enumerate(pairs):
        u, v = int(u), int(v)
        if g_prime.component[u] != g_prime.component[v]:
            continue
        if u not in cache:
            cache[u] = _dijkstra(adj, u, semantics)
        values[k] = cache[u][v]
    return EstimateTable(pairs, values, ~np.isnan(values))


def soft_update(current, predicted, beta: float):
    """Convex blend ``beta * current + (1 - beta) * predicted``."""
    return beta * np.asarray(current) + (1.0 - beta) * np.asarray(predicted)


class PATRegressor(RegressorMixin, BaseEstimator):
    """Iteratively augment the training set with refined path estimates.

    Parameters
    ----------
    estimator : PathMetricRegressor, optional
        Template network; cloned on ``fit``. Its ``epochs`` is the total
        budget, split evenly over iterations (at least ``min_epochs``
        each).
    semantics : {"additive", "congestion"}, default="additive"
    alpha : float, default=0.15
        Fraction of unmeasured pairs drawn as augmented data per iteration.
    beta : float, default=0.6
        Weight kept by the old estimate in each update.
    n_iterations : int, default=6
    reset_model : bool, default=False
        Re-initialise the network every iteration instead of continuing.
    min_epochs : int, default=50
    random_state : int, default=0
        Seeds the augmented-pair draws.
    """

    def __init__(
        self,
        estimator=None,
        semantics="additive",
        alpha=0.15,
        beta=0.6,
        n_iterations=6,
        reset_model=False,
        min_epochs=50,
        random_state=0,
    ):
        self.estimator = estimator
        self.semantics = semantics
        self.alpha = alpha
        self.beta = beta
        self.n_iterations = n_iterations
        self.reset_model = reset_model
        self.min_epochs = min_epochs
        self.random_state = random_state

    def _validate_params(self):
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")

    def fit(self, X, y, n_nodes=None):
        self._validate_params()
        template = self.estimator if self.estimator is not None else PathMetricRegressor()
        n = n_nodes or template.n_nodes
        X = check_pairs(X, n)
        y = check_targets(y, len(X), positive=True)
        X = canonical_pairs(X)
        if n is None:
            n = int(X.max()) + 1
        self.n_nodes_ = n

        pairs_t = all_pairs(n)
        measured = np.zeros(len(pairs_t), dtype=bool)
        measured[pair_index(X[:, 0], X[:, 1], n)] = True
        self.graph_ = build_measurement_graph(X, y, n)
        est = initial_estimates(self.graph_, self.semantics, pairs_t[~measured])
        self.initial_estimates_ = est.values.copy()
        reachable_idx = np.flatnonzero(est.reachable)
        n_aug = min(int(np.floor(self.alpha * len(est.pairs))), len(reachable_idx))
        per_iter = max(self.min_epochs, int(template.epochs) // self.n_iterations)

        rng = np.random.default_rng(self.random_state)
        model = clone(template).set_params(n_nodes=n, warm_start=not self.reset_model)
        self.augmented_counts_ = []
        for _ in range(self.n_iterations):
            if self.reset_model:
                model = clone(template).set_params(n_nodes=n)
            chosen = rng.choice(reachable_idx, size=n_aug, replace=False) if n_aug else np.zeros(0, dtype=np.int64)
            train_X = np.concatenate([X, est.pairs[chosen]])
            train_y = np.concatenate([y, est.values[chosen]])
            model.fit(train_X, train_y, epochs=per_iter)
            nt = model.predict(est.pairs)
            est.values = np.where(est.reachable, soft_update(est.values, nt, self.beta), nt)
            self.augmented_counts_.append(len(chosen))
        self.model_ = model
        self.estimates_ = est
        self._lookup = {(int(u), int(v)): k for k, (u, v) in enumerate(est.pairs)}
        return self

    def predict_with_provenance(self, X):
        """Refined estimate for unmeasured pairs, network output otherwise."""
        check_is_fitted(self, "estimates_")
        X = check_pairs(X, self.n_nodes_, allow_empty=True)
        if len(X) == 0:
            return np.zeros(0), np.zeros(0, dtype="<U5")
        out = self.model_.predict(X)
        source = np.full(len(X), "model", dtype="<U5")
        for row, (u, v) in enumerate(canonical_pairs(X)):
            k = self._lookup.get((int(u), int(v)))
            if k is not None:
                out[row] = self.estimates_.values[k]
                if self.estimates_.reachable[k]:
                    source[row] = "pat"
        return out, source

    def predict(self, X):
        return self.predict_with_provenance(X)[0]
