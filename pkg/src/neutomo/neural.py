"""Fully-connected sigmoid network mapping a node pair to its path metric.

A pair ``{i, j}`` enters as an ``n``-vector with ones at ``i`` and ``j``.
``k`` sigmoid hidden layers of width ``gamma`` follow, and the output is
the dot product of the last hidden layer with a weight vector (no bias, no
activation). Training minimises mean squared error with Adam.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_pairs, check_targets

CHECKPOINT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class MLPParams(NamedTuple):
    weights: List[np.ndarray]  # M_1 (n x gamma), M_2..M_k (gamma x gamma)
    biases: List[np.ndarray]
    output: np.ndarray  # gamma-vector, no output bias

    def arrays(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases, self.output]

    def copy(self) -> "MLPParams":
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.output.copy())


def init_params(n: int, gamma: int, k: int, rng: np.random.Generator) -> MLPParams:
    """Glorot-uniform weights, zero biases."""
    if gamma < 1 or k < 1:
        raise ValueError("hidden width and layer count must be >= 1")
    weights = []
    fan_in = n
    for _ in range(k):
        bound = math.sqrt(6.0 / (fan_in + gamma))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, gamma)))
        fan_in = gamma
    bound = math.sqrt(6.0 / (gamma + 1))
    output = rng.uniform(-bound, bound, size=gamma)
    return MLPParams(weights, [np.zeros(gamma) for _ in range(k)], output)


def encode_pair(pair, n: int) -> np.ndarray:
    i, j = int(pair[0]), int(pair[1])
    if i == j:
        raise ValueError(f"pair ({i}, {j}) has identical endpoints")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"pair ({i}, {j}) out of range for n={n}")
    v = np.zeros(n)
    v[i] = v[j] = 1.0
    return v


def encode_pairs(pairs: np.ndarray, n: int) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    V = np.zeros((len(pairs), n))
    rows = np.arange(len(pairs))
    V[rows, pairs[:, 0]] = 1.0
    V[rows, pairs[:, 1]] = 1.0
    return V


def _sigmoid_(z: np.ndarray) -> np.ndarray:
    np.negative(z, out=z)
    np.exp(z, out=z)
    z += 1.0
    return np.reciprocal(z, out=z)


def _hidden(params: MLPParams, V0: np.ndarray) -> List[np.ndarray]:
    acts = [V0]
    for M, b in zip(params.weights, params.biases):
        z = acts[-1] @ M
        z += b
        acts.append(_sigmoid_(z))
    return acts


def forward(params: MLPParams, v0) -> np.ndarray:
    """Prediction for one encoded pair (returns a float) or a batch (returns a vector)."""
    v0 = np.asarray(v0, dtype=float)
    n = params.weights[0].shape[0]
    if v0.shape[-1] != n:
        raise ValueError(f"input has length {v0.shape[-1]}, model expects {n}")
    out = _hidden(params, np.atleast_2d(v0))[-1] @ params.output
    return float(out[0]) if v0.ndim == 1 else out


def loss_mse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise ValueError("predictions and targets differ in shape")
    if predictions.size == 0:
        raise ValueError("MSE of an empty batch is undefined")
    return float(np.mean((predictions - targets) ** 2))


def backward(params: MLPParams, V0: np.ndarray, y: np.ndarray):
    """MSE loss and its gradient with respect to every parameter.

    Returns ``(loss, grads)`` where ``grads`` mirrors ``params``.
    """
    if len(y) == 0:
        raise ValueError("backward needs a nonempty batch")
    acts = _hidden(params, V0)
    pred = acts[-1] @ params.output
    if not np.isfinite(pred).all():
        raise FloatingPointError("non-finite network output; parameters have diverged")
    resid = pred - y
    loss = float(np.mean(resid**2))
    d_pred = 2.0 * resid / len(y)
    g_out = acts[-1].T @ d_pred
    delta = np.outer(d_pred, params.output)
    g_w: List[np.ndarray] = [None] * len(params.weights)
    g_b: List[np.ndarray] = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        a = acts[layer + 1]
        dz = delta * a * (1.0 - a)
        g_w[layer] = acts[layer].T @ dz
        g_b[layer] = dz.sum(axis=0)
        if layer:
            delta = dz @ params.weights[layer].T
    return loss, MLPParams(g_w, g_b, g_out)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Optional[List[np.ndarray]] = field(default=None, repr=False)
    v: Optional[List[np.ndarray]] = field(default=None, repr=False)


def adam_step(params: MLPParams, grads: MLPParams, state: AdamState) -> MLPParams:
    """One bias-corrected Adam update, applied in place.

    Uses the folded form ``lr * sqrt(1-b2^t)/(1-b1^t) * m / (sqrt(v) + eps*sqrt(1-b2^t))``,
    algebraically identical to the textbook update.
    """
    p_list, g_list = params.arrays(), grads.arrays()
    if state.m is None:
        state.m = [np.zeros_like(p) for p in p_list]
        state.v = [np.zeros_like(p) for p in p_list]
    for g in g_list:
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    step = state.lr * math.sqrt(c2) / c1
    eps_hat = state.eps * math.sqrt(c2)
    for p, g, m, v in zip(p_list, g_list, state.m, state.v):
        tmp = g * (1.0 - state.beta1)
        m *= state.beta1
        m += tmp
        np.multiply(g, g, out=tmp)
        tmp *= 1.0 - state.beta2
        v *= state.beta2
        v += tmp
        np.sqrt(v, out=tmp)
        tmp += eps_hat
        np.divide(m, tmp, out=tmp)
        tmp *= step
        p -= tmp
    return params


class PathMetricRegressor(RegressorMixin, BaseEstimator):
    """Predict end-to-end path metrics from node pairs.

    Parameters
    ----------
    n_nodes : int, optional
        Input dimension. Inferred as ``max(id) + 1`` when omitted.
    hidden_width : int, optional
        Neurons per hidden layer. Defaults to ``ceil(width_factor * n_nodes)``.
    width_factor : float, default=2.5
        Links-per-node estimate used when ``hidden_width`` is None.
    n_hidden_layers : int, default=2
    epochs : int, default=1000
    learning_rate : float, default=1e-3
    batch_size : int or "full", default=64
    scale_targets : bool, default=False
        Divide targets by their maximum for training; predictions are rescaled.
    warm_start : bool, default=False
        Continue from the current parameters and optimiser state on ``fit``.
    random_state : int, default=0
        Seeds initialisation and mini-batch shuffling (separate streams).

    Attributes
    ----------
    params_ : MLPParams
    adam_ : AdamState
    loss_curve_ : list of float
        Mean mini-batch MSE of each epoch, in target units.
    """

    def __init__(
        self,
        n_nodes=None,
        hidden_width=None,
        width_factor=2.5,
        n_hidden_layers=2,
        epochs=1000,
        learning_rate=1e-3,
        batch_size=64,
        scale_targets=False,
        warm_start=False,
        random_state=0,
    ):
        self.n_nodes = n_nodes
        self.hidden_width = hidden_width
        self.width_factor = width_factor
        self.n_hidden_layers = n_hidden_layers
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.scale_targets = scale_targets
        self.warm_start = warm_start
        self.random_state = random_state

    def _resolve_width(self, n):
        if self.hidden_width is not None:
            return int(self.hidden_width)
        return int(math.ceil(self.width_factor * n - 1e-9))

    def _init(self, n):
        init_seq, shuffle_seq = np.random.SeedSequence(self.random_state).spawn(2)
        self.n_nodes_ = n
        self.hidden_width_ = self._resolve_width(n)
        self.params_ = init_params(n, self.hidden_width_, self.n_hidden_layers, np.random.default_rng(init_seq))
        self.adam_ = AdamState(lr=self.learning_rate)
        self._shuffle_rng = np.random.default_rng(shuffle_seq)
        self.loss_curve_ = []
        self.epochs_trained_ = 0

    def fit(self, X, y, epochs=None):
        """Train on measured pairs ``X`` (shape ``(m, 2)``) with metrics ``y``.

        ``epochs`` overrides the constructor value for this call only.
        """
        X = check_pairs(X, self.n_nodes)
        y = check_targets(y, len(X))
        if len(X) == 0:
            raise ValueError("no training pairs")
        n = self.n_nodes if self.n_nodes is not None else int(X.max()) + 1
        if not (self.warm_start and hasattr(self, "params_")):
            self._init(n)
            self.target_scale_ = float(np.abs(y).max()) if self.scale_targets and np.abs(y).max() > 0 else 1.0
        elif n > self.n_nodes_:
            raise ValueError(f"warm start with {n} nodes but model has {self.n_nodes_}")
        self.adam_.lr = self.learning_rate

        V = encode_pairs(X, self.n_nodes_)
        t = y / self.target_scale_
        n_samples = len(X)
        batch = n_samples if self.batch_size in (None, "full") else max(1, min(int(self.batch_size), n_samples))
        n_epochs = self.epochs if epochs is None else epochs
        for _ in range(int(n_epochs)):
            order = self._shuffle_rng.permutation(n_samples)
            epoch = self.epochs_trained_ + 1
            total = 0.0
            for start in range(0, n_samples, batch):
                idx = order[start : start + batch]
                try:
                    # overflow is caught below as a non-finite value, so numpy need not warn
                    with np.errstate(over="ignore", invalid="ignore"):
                        loss, grads = backward(self.params_, V[idx], t[idx])
                        adam_step(self.params_, grads, self.adam_)
                except FloatingPointError as exc:
                    raise TrainingDivergedError(f"training diverged in epoch {epoch}: {exc}", epoch) from exc
                total += loss * len(idx)
            epoch_loss = total / n_samples * self.target_scale_**2
            if not math.isfinite(epoch_loss):
                raise TrainingDivergedError(f"training loss became non-finite in epoch {epoch}", epoch)
            self.loss_curve_.append(epoch_loss)
            self.epochs_trained_ = epoch
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_pairs(X, self.n_nodes_, allow_empty=True)
        if len(X) == 0:
            return np.zeros(0)
        return forward(self.params_, encode_pairs(X, self.n_nodes_)) * self.target_scale_

    def hidden_activations(self, X):
        """Per-layer sigmoid outputs for the given pairs."""
        check_is_fitted(self, "params_")
        X = check_pairs(X, self.n_nodes_)
        return _hidden(self.params_, encode_pairs(X, self.n_nodes_))[1:]


def save_model(model: PathMetricRegressor, path) -> None:
    """Write config, parameters and optimiser state to an ``.npz`` checkpoint."""
    check_is_fitted(model, "params_")
    header = {
        "version": CHECKPOINT_VERSION,
        "params": model.get_params(),
        "n_nodes": model.n_nodes_,
        "hidden_width": model.hidden_width_,
        "target_scale": model.target_scale_,
        "epochs_trained": model.epochs_trained_,
        "loss_curve": model.loss_curve_,
        "adam": {k: getattr(model.adam_, k) for k in ("lr", "beta1", "beta2", "eps", "t")},
        "shuffle_rng": model._shuffle_rng.bit_generator.state,
    }
    arrays = {}
    for idx, w in enumerate(model.params_.weights):
        arrays[f"weight_{idx}"] = w
        arrays[f"bias_{idx}"] = model.params_.biases[idx]
    arrays["output"] = model.params_.output
    if model.adam_.m is not None:
        for idx, (m, v) in enumerate(zip(model.adam_.m, model.adam_.v)):
            arrays[f"adam_m_{idx}"] = m
            arrays[f"adam_v_{idx}"] = v
    with Path(path).open("wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)


def load_model(path) -> PathMetricRegressor:
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        model = PathMetricRegressor(**header["params"])
        k = sum(1 for key in data.files if key.startswith("weight_"))
        model.params_ = MLPParams(
            [data[f"weight_{i}"].copy() for i in range(k)],
            [data[f"bias_{i}"].copy() for i in range(k)],
            data["output"].copy(),
        )
        model.adam_ = AdamState(**header["adam"])
        if "adam_m_0" in data.files:
            count = len(model.params_.arrays())
            model.adam_.m = [data[f"adam_m_{i}"].copy() for i in range(count)]
            model.adam_.v = [data[f"adam_v_{i}"].copy() for i in range(count)]
    model.n_nodes_ = header["n_nodes"]
    model.hidden_width_ = header["hidden_width"]
    model.target_scale_ = header["target_scale"]
    model.epochs_trained_ = header["epochs_trained"]
    model.loss_curve_ = list(header["loss_curve"])
    model._shuffle_rng = np.random.default_rng()
    model._shuffle_rng.bit_generator.state = header["shuffle_rng"]
    return model
