"""Extended adjacency matrices from hop-count metrics, and FPR/FNR scoring."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .routing import all_pairs, pair_index


@dataclass(frozen=True)
class ExtendedAdjacency:
    """Binary symmetric ``n x n`` matrix marking pairs that are ``m`` hops apart."""

    m: int
    matrix: np.ndarray

    def __post_init__(self):
        a = self.matrix
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("extended adjacency must be square")
        if a.diagonal().any() or not np.array_equal(a, a.T):
            raise ValueError("extended adjacency must be symmetric with a zero diagonal")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def pair_list(self) -> np.ndarray:
        iu, ju = np.nonzero(np.triu(self.matrix, k=1))
        return np.column_stack([iu, ju])

    def to_text(self, path) -> None:
        lines = [f"# m={self.m} n={self.n}"] + [f"{i} {j}" for i, j in self.pair_list()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_text(cls, path) -> "ExtendedAdjacency":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = dict(tok.split("=") for tok in lines[0].lstrip("#").split())
        n, m = int(header["n"]), int(header["m"])
        a = np.zeros((n, n), dtype=bool)
        for line in lines[1:]:
            if line.strip():
                i, j = map(int, line.split())
                a[i, j] = a[j, i] = True
        return cls(m, a)


@dataclass(frozen=True)
class ReconstructionScore:
    """FPR/FNR of a reconstructed matrix; ``None`` marks an undefined rate."""

    m: int
    fpr: Optional[float]
    fnr: Optional[float]
    tau: int
    ordered: bool = False


def reconstruct(values, n: int, m: int) -> ExtendedAdjacency:
    """Mark pair ``{i, j}`` when its value falls in ``(m - 0.5, m + 0.5]``.

    ``values`` is aligned with ``all_pairs(n)``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (n * (n - 1) // 2,):
        raise ValueError(f"expected {n * (n - 1) // 2} pair values for n={n}, got {values.shape}")
    if not np.isfinite(values).all():
        raise ValueError("pair values must be finite")
    hit = (values > m - 0.5) & (values <= m + 0.5)
    a = np.zeros((n, n), dtype=bool)
    pairs = all_pairs(n)[hit]
    a[pairs[:, 0], pairs[:, 1]] = True
    a[pairs[:, 1], pairs[:, 0]] = True
    return ExtendedAdjacency(m, a)


def merge_measured(n: int, measured_pairs, measured_values, inferred_pairs, inferred_values) -> np.ndarray:
    """Full per-pair value vector: measured values verbatim, inferred elsewhere."""
    out = np.full(n * (n - 1) // 2, np.nan)
    for pairs, vals in ((inferred_pairs, inferred_values), (measured_pairs, measured_values)):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs):
            out[pair_index(pairs[:, 0], pairs[:, 1], n)] = vals
    if np.isnan(out).any():
        raise ValueError("some pairs have neither a measured nor an inferred value")
    return out


def score(predicted: ExtendedAdjacency, truth: ExtendedAdjacency, ordered: bool = False) -> ReconstructionScore:
    """False positive and false negative rates over off-diagonal pairs.

    By default each unordered pair counts once, so there are ``n(n-1)/2``
    candidates. ``ordered=True`` counts all ``n^2`` matrix entries
    instead, diagonal included.
    """
    if predicted.n != truth.n or predicted.m != truth.m:
        raise ValueError("matrices differ in n or m")
    n = truth.n
    if ordered:
        p, t = predicted.matrix, truth.matrix
        total = n * n
    else:
        iu = np.triu_indices(n, k=1)
        p, t = predicted.matrix[iu], truth.matrix[iu]
        total = n * (n - 1) // 2
    tau = int(t.sum())
    fp = int((p & ~t).sum())
    fn = int((~p & t).sum())
    fpr = fp / (total - tau) if total > tau else None
    fnr = fn / tau if tau > 0 else None
    return ReconstructionScore(truth.m, fpr, fnr, tau, ordered)


def reconstruction_report(pred_values, true_hops, n: int, ms=range(1, 6)):
    """Score ``reconstruct`` against the truth for each ``m``."""
    return [score(reconstruct(pred_values, n, m), reconstruct(true_hops, n, m)) for m in ms]
