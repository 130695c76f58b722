"""Ground-truth end-to-end path metrics under min-hop or best-performance routing.

Every unordered pair ``{u, v}`` (``u < v``) is routed from ``u`` to ``v``.
Among equally good paths the lexicographically smallest node sequence wins,
so results are reproducible regardless of heap or iteration order.
"""

from __future__ import annotations

import csv
import enum
import heapq
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from .topology import MetricSemantics, Topology


class RoutingError(ValueError):
    pass


class RoutingStrategy(str, enum.Enum):
    MHR = "mhr"
    BPR = "bpr"


def path_metric(link_metrics: Sequence[float], semantics: MetricSemantics) -> float:
    """Combine link metrics along a path: sum for additive, max for congestion."""
    if len(link_metrics) == 0:
        raise ValueError("path_metric needs at least one link")
    if MetricSemantics(semantics) is MetricSemantics.ADDITIVE:
        total = 0.0
        for w in link_metrics:
            total += w
        return float(total)
    return float(max(link_metrics))


def all_pairs(n: int) -> np.ndarray:
    """Canonical ``(u, v)``, ``u < v`` pair array in row-major order."""
    iu, ju = np.triu_indices(n, k=1)
    return np.column_stack([iu, ju]).astype(np.int64)


@dataclass(frozen=True)
class GroundTruthTable:
    """Per-pair hop count and path metric, rows aligned with ``all_pairs(n)``."""

    n: int
    pairs: np.ndarray
    hops: np.ndarray
    metric: np.ndarray

    def __len__(self):
        return len(self.pairs)

    def lookup(self, u: int, v: int) -> Tuple[int, float]:
        k = pair_index(u, v, self.n)
        return int(self.hops[k]), float(self.metric[k])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "hops", "metric"])
            for (u, v), h, m in zip(self.pairs, self.hops, self.metric):
                w.writerow([int(u), int(v), int(h), repr(float(m))])

    @classmethod
    def from_csv(cls, path) -> "GroundTruthTable":
        rows = []
        with Path(path).open(newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((int(row["u"]), int(row["v"]), int(row["hops"]), float(row["metric"])))
        n = max(max(u, v) for u, v, _, _ in rows) + 1
        pairs = all_pairs(n)
        if len(rows) != len(pairs):
            raise RoutingError(f"{path}: expected {len(pairs)} pairs for n={n}, found {len(rows)}")
        hops = np.zeros(len(pairs), dtype=np.int64)
        metric = np.zeros(len(pairs))
        for u, v, h, m in rows:
            k = pair_index(u, v, n)
            hops[k], metric[k] = h, m
        return cls(n, pairs, hops, metric)


def pair_index(u, v, n: int):
    """Row of ``{u, v}`` in ``all_pairs(n)``; vectorised over arrays."""
    u = np.asarray(u)
    v = np.asarray(v)
    a = np.minimum(u, v)
    b = np.maximum(u, v)
    idx = a * n - a * (a + 1) // 2 + (b - a - 1)
    return int(idx) if idx.ndim == 0 else idx


def _dijkstra(adj, source: int, semantics: MetricSemantics) -> List[float]:
    """Best-path cost from ``source``; ``max`` replaces ``+`` for congestion."""
    combine = (lambda a, b: a + b) if semantics is MetricSemantics.ADDITIVE else max
    dist = [float("inf")] * len(adj)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = [False] * len(adj)
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y, w in adj[x]:
            nd = combine(d, w)
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def _bfs_hops(adj, source: int) -> List[int]:
    hops = [-1] * len(adj)
    hops[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y, _ in adj[x]:
            if hops[y] < 0:
                hops[y] = hops[x] + 1
                queue.append(y)
    return hops


def _reachable_avoiding(adj, start: int, target: int, limit: float, blocked: set) -> bool:
    if start == target:
        return True
    seen = set(blocked)
    seen.add(start)
    stack = [start]
    while stack:
        x = stack.pop()
        for y, w in adj[x]:
            if w <= limit and y not in seen:
                if y == target:
                    return True
                seen.add(y)
                stack.append(y)
    return False


def _greedy_path(adj, s: int, t: int, step_ok) -> List[int]:
    path = [s]
    x = s
    while x != t:
        for y, w in adj[x]:
            if step_ok(x, y, w, path):
                path.append(y)
                x = y
                break
        else:  # pragma: no cover - the distance labels guarantee a successor
            raise RoutingError(f"no continuation from {x} towards {t}")
    return path


def route_paths(topology: Topology, strategy: RoutingStrategy, semantics: MetricSemantics) -> dict:
    """Chosen node sequence for every canonical pair ``(u, v)``."""
    strategy = RoutingStrategy(strategy)
    semantics = MetricSemantics(semantics)
    if not topology.connected:
        comps = topology.components()
        examples = [(comps[0][0], c[0]) for c in comps[1:4]]
        raise RoutingError(
            f"topology has {len(comps)} components; unreachable pairs include {examples}"
        )
    adj = topology.adjacency()
    n = topology.n
    paths = {}
    for t in range(1, n):
        if strategy is RoutingStrategy.MHR:
            hops_t = _bfs_hops(adj, t)

            def ok(x, y, w, path, hops_t=hops_t):
                return hops_t[y] == hops_t[x] - 1

        elif semantics is MetricSemantics.ADDITIVE:
            dist_t = _dijkstra(adj, t, semantics)

            def ok(x, y, w, path, dist_t=dist_t):
                return w + dist_t[y] == dist_t[x]

        else:
            dist_t = _dijkstra(adj, t, semantics)
            ok = None
        for s in range(t):
            if ok is not None:
                paths[(s, t)] = _greedy_path(adj, s, t, ok)
                continue
            # Minimax-optimal paths are exactly the simple s-t paths using
            # links no worse than the bottleneck; extend greedily while a
            # simple completion still exists.
            limit = dist_t[s]

            def ok_minimax(x, y, w, path, limit=limit, t=t):
                if w > limit or y in path:
                    return False
                return _reachable_avoiding(adj, y, t, limit, set(path))

            paths[(s, t)] = _greedy_path(adj, s, t, ok_minimax)
    return paths


def route_all_pairs(topology: Topology, strategy: RoutingStrategy, semantics: MetricSemantics) -> GroundTruthTable:
    semantics = MetricSemantics(semantics)
    paths = route_paths(topology, strategy, semantics)
    wmap = topology.weight_map()
    pairs = all_pairs(topology.n)
    hops = np.empty(len(pairs), dtype=np.int64)
    metric = np.empty(len(pairs))
    for k, (u, v) in enumerate(pairs):
        p = paths[(int(u), int(v))]
        links = [wmap[(min(a, b), max(a, b))] for a, b in zip(p, p[1:])]
        hops[k] = len(links)
        metric[k] = path_metric(links, semantics)
    return GroundTruthTable(topology.n, pairs, hops, metric)
