"""Network topologies, link-metric regimes and edge-list I/O."""

from __future__ import annotations

import enum
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class TopologyError(ValueError):
    """Raised for malformed or unusable topology input."""


class MetricSemantics(str, enum.Enum):
    ADDITIVE = "additive"
    CONGESTION = "congestion"


class RegimeKind(str, enum.Enum):
    UNWEIGHTED = "unweighted"
    FROM_FILE = "from_file"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class LinkMetricRegime:
    """How link metrics are assigned: all ones, kept from file, or i.i.d. uniform."""

    kind: RegimeKind = RegimeKind.UNIFORM
    lo: float = 1.0
    hi: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegimeKind(self.kind))
        if self.kind is RegimeKind.UNIFORM and not (0 < self.lo <= self.hi):
            raise ValueError(f"uniform regime needs 0 < lo <= hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def parse(cls, text: str) -> "LinkMetricRegime":
        """Parse ``unweighted``, ``from_file`` or ``uniform[:lo:hi]``."""
        parts = text.strip().lower().split(":")
        kind = RegimeKind(parts[0])
        if kind is RegimeKind.UNIFORM and len(parts) == 3:
            return cls(kind, float(parts[1]), float(parts[2]))
        if len(parts) != 1:
            raise ValueError(f"cannot parse link-metric regime {text!r}")
        return cls(kind)

    def __str__(self):
        if self.kind is RegimeKind.UNIFORM:
            return f"uniform:{self.lo:g}:{self.hi:g}"
        return self.kind.value


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph on nodes ``0..n-1`` with a positive metric per link.

    ``edges`` holds ``(u, v)`` with ``u < v``; ``weights[k]`` belongs to
    ``edges[k]``. ``has_file_weights`` records whether the metrics came from
    the input file (needed by the ``from_file`` regime). ``labels`` maps each
    dense id back to the label it had in the source file.
    """

    n: int
    edges: Tuple[Tuple[int, int], ...]
    weights: Tuple[float, ...]
    has_file_weights: bool = False
    labels: Tuple[str, ...] = ()
    connected: bool = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise TopologyError("a topology needs at least one node")
        if len(self.edges) != len(self.weights):
            raise TopologyError("edges and weights differ in length")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise TopologyError(f"self-loop on node {u}")
            if not (0 <= u < v < self.n):
                raise TopologyError(f"edge ({u}, {v}) is not canonical for n={self.n}")
            if (u, v) in seen:
                raise TopologyError(f"parallel edge ({u}, {v})")
            seen.add((u, v))
        for w in self.weights:
            if not (w > 0 and math.isfinite(w)):
                raise TopologyError(f"link metrics must be finite and positive, got {w}")
        if self.labels and len(self.labels) != self.n:
            raise TopologyError("label map does not cover every node")
        object.__setattr__(self, "connected", len(self.components()) == 1)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def average_degree(self) -> float:
        return 2.0 * len(self.edges) / self.n

    def adjacency(self) -> List[List[Tuple[int, float]]]:
        """Neighbour lists sorted by node id, each entry ``(neighbour, metric)``."""
        adj: List[List[Tuple[int, float]]] = [[] for _ in range(self.n)]
        for (u, v), w in zip(self.edges, self.weights):
            adj[u].append((v, w))
            adj[v].append((u, w))
        for nbrs in adj:
            nbrs.sort()
        return adj

    def components(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        label = [-1] * self.n
        comps = []
        for s in range(self.n):
            if label[s] >= 0:
                continue
            label[s] = len(comps)
            comp = [s]
            queue = deque([s])
            while queue:
                x = queue.popleft()
                for y in adj[x]:
                    if label[y] < 0:
                        label[y] = label[s]
                        comp.append(y)
                        queue.append(y)
            comps.append(sorted(comp))
        return comps

    def weight_map(self) -> Dict[Tuple[int, int], float]:
        return dict(zip(self.edges, self.weights))


def _from_edge_dict(n: int, edge_weights: Dict[Tuple[int, int], float], **kwargs) -> Topology:
    edges = tuple(sorted(edge_weights))
    return Topology(n, edges, tuple(float(edge_weights[e]) for e in edges), **kwargs)


def _label_key(label: str):
    try:
        return (0, int(label), "")
    except ValueError:
        return (1, 0, label)


def load_topology(path) -> Topology:
    """Read a whitespace-separated ``u v [weight]`` edge list.

    Node labels are re-indexed to ``0..n-1`` (numeric labels in numeric
    order, others lexicographically after them). Duplicate edges keep the
    first weight and emit a warning.
    """
    path = Path(path)
    raw: List[Tuple[str, str, Optional[float]]] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) not in (2, 3):
                raise TopologyError(f"{path}:{lineno}: expected 'u v [weight]', got {line.strip()!r}")
            u, v = parts[0], parts[1]
            if u == v:
                raise TopologyError(f"{path}:{lineno}: self-loop on node {u!r}")
            weight = None
            if len(parts) == 3:
                try:
                    weight = float(parts[2])
                except ValueError:
                    raise TopologyError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
                if not (weight > 0 and math.isfinite(weight)):
                    raise TopologyError(f"{path}:{lineno}: weight must be positive, got {parts[2]}")
            raw.append((u, v, weight))
    if not raw:
        raise TopologyError(f"{path}: no edges found")

    labels = sorted({x for u, v, _ in raw for x in (u, v)}, key=_label_key)
    index = {lab: i for i, lab in enumerate(labels)}
    edge_weights: Dict[Tuple[int, int], float] = {}
    duplicates = 0
    for u, v, w in raw:
        a, b = sorted((index[u], index[v]))
        if (a, b) in edge_weights:
            duplicates += 1
            continue
        edge_weights[(a, b)] = 1.0 if w is None else w
    if duplicates:
        warnings.warn(f"{path}: collapsed {duplicates} duplicate edge(s), keeping first weight")
    has_weights = all(w is not None for _, _, w in raw)
    return _from_edge_dict(len(labels), edge_weights, has_file_weights=has_weights, labels=tuple(labels))


def save_topology(topology: Topology, path) -> None:
    """Write the edge list with dense ids and 6-significant-digit weights."""
    path = Path(path)
    lines = [f"# n={topology.n} edges={topology.edge_count}"]
    lines += [f"{u} {v} {w:.6g}" for (u, v), w in zip(topology.edges, topology.weights)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def generate_topology(n: int, target_avg_degree: float, seed: int) -> Topology:
    """Random connected graph: a random spanning tree plus uniform extra edges.

    The edge count is ``round(target_avg_degree * n / 2)`` so the realised
    average degree is as close to the target as an integer edge count allows.
    """
    if n < 3:
        raise TopologyError("generate_topology needs n >= 3")
    if not (2 <= target_avg_degree < n - 1) and not (n == 3 and target_avg_degree == 2):
        raise TopologyError(f"average degree {target_avg_degree} unreachable for n={n}; need 2 <= d < n-1")
    m = int(math.floor(target_avg_degree * n / 2 + 0.5))
    if m < n - 1 or m > n * (n - 1) // 2:
        raise TopologyError(f"cannot build a connected graph with {m} edges on {n} nodes")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(k)]
        edges.add(tuple(sorted((int(order[k]), int(parent)))))
    while len(edges) < m:
        u, v = rng.choice(n, size=2, replace=False)
        edges.add(tuple(sorted((int(u), int(v)))))
    return _from_edge_dict(n, {e: 1.0 for e in edges})


def assign_link_metrics(topology: Topology, regime: LinkMetricRegime, seed: int) -> Topology:
    if regime.kind is RegimeKind.UNWEIGHTED:
        weights = (1.0,) * topology.edge_count
    elif regime.kind is RegimeKind.FROM_FILE:
        if not topology.has_file_weights:
            raise TopologyError("from_file regime requested but the topology carries no link weights")
        return topology
    else:
        rng = np.random.default_rng(seed)
        weights = tuple(float(w) for w in rng.uniform(regime.lo, regime.hi, size=topology.edge_count))
    return replace(topology, weights=weights)


def topology_from_edges(n: int, edges: Sequence[Tuple[int, int]], weights: Optional[Sequence[float]] = None) -> Topology:
    """Build a topology from in-memory edges (any orientation)."""
    if weights is None:
        weights = [1.0] * len(edges)
    edge_weights = {}
    for (u, v), w in zip(edges, weights):
        if u == v:
            raise TopologyError(f"self-loop on node {u}")
        edge_weights.setdefault(tuple(sorted((int(u), int(v)))), float(w))
    return _from_edge_dict(n, edge_weights, has_file_weights=True)
