"""Brute-force references used to check the fast implementations."""

import itertools

import numpy as np

from neutomo.topology import topology_from_edges


def simple_paths(adj, s, t):
    stack = [(s, [s])]
    while stack:
        x, path = stack.pop()
        if x == t:
            yield path
            continue
        for y in adj[x]:
            if y not in path:
                stack.append((y, path + [y]))


def path_value(path, wmap, semantics):
    links = [wmap[(min(a, b), max(a, b))] for a, b in zip(path, path[1:])]
    if semantics == "additive":
        total = 0.0
        for w in links:
            total += w
        return total
    return max(links)


def brute_force_route(topology, strategy, semantics):
    """Enumerate every simple path; return {(u, v): (hops, metric)}."""
    adj = {x: [] for x in range(topology.n)}
    for u, v in topology.edges:
        adj[u].append(v)
        adj[v].append(u)
    wmap = topology.weight_map()
    out = {}
    for u, v in itertools.combinations(range(topology.n), 2):
        candidates = []
        for p in simple_paths(adj, u, v):
            value = path_value(p, wmap, semantics)
            key = (len(p), p) if strategy == "mhr" else (value, p)
            candidates.append((key, p, value))
        _, best, value = min(candidates, key=lambda c: c[0])
        out[(u, v)] = (len(best) - 1, value)
    return out


def brute_force_best_value(n, edges, weights, semantics, u, v):
    """Best path value between u and v, or None when disconnected."""
    adj = {x: [] for x in range(n)}
    wmap = {}
    for (a, b), w in zip(edges, weights):
        a, b = min(a, b), max(a, b)
        adj[a].append(b)
        adj[b].append(a)
        wmap[(a, b)] = w
    values = [path_value(p, wmap, semantics) for p in simple_paths(adj, u, v)]
    return min(values) if values else None


def random_small_graph(rng, n_max=8, connected=True, int_weights=True):
    """Random graph on 2..n_max nodes, optionally forced connected."""
    n = int(rng.integers(2, n_max + 1))
    edges = set()
    if connected:
        order = rng.permutation(n)
        for k in range(1, n):
            edges.add(tuple(sorted((int(order[k]), int(order[rng.integers(k)])))))
    p = rng.uniform(0.1, 0.7)
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.add((u, v))
    if not edges:
        edges.add((0, 1))
    edges = sorted(edges)
    if int_weights:
        weights = rng.integers(1, 6, size=len(edges)).astype(float)
    else:
        weights = rng.uniform(1, 10, size=len(edges))
    return topology_from_edges(n, edges, weights)


def numeric_gradient(f, arrays, h=1e-4):
    """Central differences of scalar ``f()`` with respect to each array in place."""
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = a[idx]
            a[idx] = old + h
            up = f()
            a[idx] = old - h
            down = f()
            a[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads
