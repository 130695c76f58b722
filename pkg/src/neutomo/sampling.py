"""Choosing the measured pair set with node coverage guaranteed."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .routing import GroundTruthTable, all_pairs, pair_index


class SamplingError(ValueError):
    pass


class SamplingMethod(str, enum.Enum):
    RANDOM = "random"
    MONITOR = "monitor"


@dataclass(frozen=True)
class MeasurementSet:
    """Measured pairs ``S`` and held-out pairs ``T \\ S`` with their true metrics."""

    n: int
    measured_pairs: np.ndarray
    measured_values: np.ndarray
    heldout_pairs: np.ndarray
    heldout_values: np.ndarray
    method: SamplingMethod
    ratio: float
    monitors: Tuple[int, ...] = ()

    @property
    def realised_ratio(self) -> float:
        total = len(self.measured_pairs) + len(self.heldout_pairs)
        return len(self.measured_pairs) / total

    def covered_nodes(self) -> set:
        return set(np.unique(self.measured_pairs).tolist())

    def to_csv(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, pairs, values in (
            ("measured.csv", self.measured_pairs, self.measured_values),
            ("heldout.csv", self.heldout_pairs, self.heldout_values),
        ):
            with (directory / name).open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["u", "v", "metric"])
                for (u, v), m in zip(pairs, values):
                    w.writerow([int(u), int(v), repr(float(m))])

    @classmethod
    def from_csv(cls, directory, n: Optional[int] = None, method="random", ratio: float = float("nan")):
        directory = Path(directory)
        parts = []
        for name in ("measured.csv", "heldout.csv"):
            rows = []
            with (directory / name).open(newline="") as fh:
                for row in csv.DictReader(fh):
                    rows.append((int(row["u"]), int(row["v"]), float(row["metric"])))
            pairs = np.array([(min(u, v), max(u, v)) for u, v, _ in rows], dtype=np.int64).reshape(-1, 2)
            parts.append((pairs, np.array([m for _, _, m in rows], dtype=float)))
        if n is None:
            n = int(max(parts[0][0].max(initial=0), parts[1][0].max(initial=0))) + 1
        return cls(n, parts[0][0], parts[0][1], parts[1][0], parts[1][1], SamplingMethod(method), ratio)


def target_size(total_pairs: int, ratio: float) -> int:
    if not 0 < ratio < 1:
        raise SamplingError(f"ratio must lie in (0, 1), got {ratio}")
    return int(math.floor(ratio * total_pairs + 0.5))


def monitors_needed(n: int, target: int) -> int:
    """Smallest monitor count whose monitor-involving pairs reach ``target``."""
    for rho in range(1, n + 1):
        if rho * n - rho * (rho + 1) // 2 >= target:
            return rho
    raise SamplingError(f"{target} pairs exceed all {n * (n - 1) // 2} pairs")


def _min_cover_with_monitors(n: int, rho: int) -> int:
    # every non-monitor needs its own pair; leftover monitors pair up
    spare = max(0, rho - (n - rho))
    return (n - rho) + (spare + 1) // 2


def _build(gt: GroundTruthTable, chosen: np.ndarray, method, ratio, monitors=()) -> MeasurementSet:
    mask = np.zeros(len(gt.pairs), dtype=bool)
    mask[chosen] = True
    return MeasurementSet(
        gt.n,
        gt.pairs[mask].copy(),
        gt.metric[mask].copy(),
        gt.pairs[~mask].copy(),
        gt.metric[~mask].copy(),
        SamplingMethod(method),
        float(ratio),
        tuple(int(m) for m in monitors),
    )


def _repair_coverage(n: int, pairs: np.ndarray, chosen: set, candidates: np.ndarray, rng) -> set:
    """Swap pairs in for uncovered nodes, dropping pairs whose endpoints stay covered.

    ``candidates`` are the pair indices allowed in the sample.
    """
    count = np.zeros(n, dtype=np.int64)
    for k in chosen:
        count[pairs[k]] += 1
    by_node = [[] for _ in range(n)]
    for k in candidates:
        u, v = pairs[k]
        by_node[u].append(k)
        by_node[v].append(k)
    for x in rng.permutation(n):
        if count[x] > 0:
            continue
        options = [k for k in by_node[x] if k not in chosen]
        if not options:
            raise SamplingError(f"node {x} has no measurable pair")
        # prefer a pair that also covers another uncovered node
        both = [k for k in options if count[pairs[k]].max() == 0]
        pool = both if both else options
        new = int(pool[rng.integers(len(pool))])
        chosen.add(new)
        count[pairs[new]] += 1
        redundant = sorted(k for k in chosen if k != new and count[pairs[k]].min() >= 2)
        if not redundant:
            raise SamplingError("coverage cannot be repaired at the requested ratio")
        drop = redundant[rng.integers(len(redundant))]
        chosen.remove(drop)
        count[pairs[drop]] -= 1
    return chosen


def sample_random(gt: GroundTruthTable, ratio: float, seed: int) -> MeasurementSet:
    """Uniform sample of ``round(ratio * |T|)`` pairs, repaired to cover every node."""
    total = len(gt.pairs)
    size = target_size(total, ratio)
    if size < gt.n / 2:
        raise SamplingError(f"{size} pairs cannot cover {gt.n} nodes")
    rng = np.random.default_rng(seed)
    chosen = set(int(k) for k in rng.choice(total, size=size, replace=False))
    try:
        chosen = _repair_coverage(gt.n, gt.pairs, set(chosen), np.arange(total), rng)
    except SamplingError:
        # swaps can dead-end when size is near n/2; start from a random minimum cover instead
        chosen = _cover_then_fill(gt.n, total, size, rng)
    return _build(gt, np.array(sorted(chosen), dtype=np.int64), SamplingMethod.RANDOM, ratio)


def _cover_then_fill(n: int, total: int, size: int, rng) -> set:
    """Random perfect-ish matching covering every node, topped up with uniform pairs."""
    order = [int(x) for x in rng.permutation(n)]
    cover = list(zip(order[0::2], order[1::2]))
    if n % 2:
        last = order[-1]
        cover.append((last, order[int(rng.integers(n - 1))]))
    chosen = {int(pair_index(u, v, n)) for u, v in cover}
    rest = np.setdiff1d(np.arange(total), np.fromiter(chosen, dtype=np.int64))
    chosen.update(int(k) for k in rng.choice(rest, size=size - len(chosen), replace=False))
    return chosen


def sample_monitor_based(gt: GroundTruthTable, ratio: float, seed: int) -> MeasurementSet:
    """Pairs touching ``rho`` random monitors, subsampled to the target size.

    ``rho`` starts at the smallest count whose monitor pairs reach the
    target and grows until the target can also cover every node.
    """
    n = gt.n
    size = target_size(len(gt.pairs), ratio)
    if size < n / 2:
        raise SamplingError(f"{size} pairs cannot cover {n} nodes")
    rho = monitors_needed(n, size)
    while _min_cover_with_monitors(n, rho) > size:
        rho += 1
        if rho > n:
            raise SamplingError("no monitor count satisfies coverage at this ratio")
    rng = np.random.default_rng(seed)
    monitors = np.sort(rng.choice(n, size=rho, replace=False))
    is_monitor = np.zeros(n, dtype=bool)
    is_monitor[monitors] = True
    candidates = np.flatnonzero(is_monitor[gt.pairs[:, 0]] | is_monitor[gt.pairs[:, 1]])

    chosen: set = set()
    covered = np.zeros(n, dtype=bool)
    # non-monitors first: each needs a pair of its own
    order = rng.permutation(n)
    order = np.concatenate([order[~is_monitor[order]], order[is_monitor[order]]])
    for x in order:
        if covered[x]:
            continue
        options = candidates[(gt.pairs[candidates] == x).any(axis=1)]
        fresh = options[~covered[gt.pairs[options]].any(axis=1)]
        pool = fresh if len(fresh) else options
        k = int(pool[rng.integers(len(pool))])
        chosen.add(k)
        covered[gt.pairs[k]] = True
    if len(chosen) > size:
        raise SamplingError("coverage needs more pairs than the requested ratio allows")
    rest = np.array([k for k in candidates if k not in chosen], dtype=np.int64)
    extra = rng.choice(rest, size=size - len(chosen), replace=False)
    chosen.update(int(k) for k in extra)
    return _build(gt, np.array(sorted(chosen), dtype=np.int64), SamplingMethod.MONITOR, ratio, monitors)


def sample(gt: GroundTruthTable, method, ratio: float, seed: int) -> MeasurementSet:
    if SamplingMethod(method) is SamplingMethod.RANDOM:
        return sample_random(gt, ratio, seed)
    return sample_monitor_based(gt, ratio, seed)


def measured_mask(ms: MeasurementSet) -> np.ndarray:
    mask = np.zeros(ms.n * (ms.n - 1) // 2, dtype=bool)
    mask[pair_index(ms.measured_pairs[:, 0], ms.measured_pairs[:, 1], ms.n)] = True
    return mask


__all__ = [
    "MeasurementSet",
    "SamplingError",
    "SamplingMethod",
    "all_pairs",
    "measured_mask",
    "monitors_needed",
    "sample",
    "sample_monitor_based",
    "sample_random",
    "target_size",
]
