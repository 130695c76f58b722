import warnings
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutomo.topology import (
    LinkMetricRegime,
    RegimeKind,
    Topology,
    TopologyError,
    assign_link_metrics,
    generate_topology,
    load_topology,
    save_topology,
)


def bfs_reaches_all(topo):
    adj = {x: [] for x in range(topo.n)}
    for u, v in topo.edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == topo.n


def write(tmp_path, text, name="g.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_simple_file(tmp_path):
    topo = load_topology(write(tmp_path, "0 1 2.0\n1 2 3.0\n"))
    assert topo.n == 3
    assert topo.edges == ((0, 1), (1, 2))
    assert topo.weights == (2.0, 3.0)
    assert topo.has_file_weights


def test_load_comments_reindex_and_defaults(tmp_path):
    topo = load_topology(write(tmp_path, "# header\n10 30\n30 20 4.5\n\n"))
    assert topo.n == 3
    assert topo.labels == ("10", "20", "30")
    assert topo.weight_map() == {(0, 2): 1.0, (1, 2): 4.5}
    assert not topo.has_file_weights


def test_load_rejects_self_loop(tmp_path):
    with pytest.raises(TopologyError, match="self-loop"):
        load_topology(write(tmp_path, "0 1 1.0\n0 0 1.0\n"))


def test_load_reports_line_number(tmp_path):
    with pytest.raises(TopologyError, match=":2:"):
        load_topology(write(tmp_path, "0 1\n0 1 2 3\n"))
    with pytest.raises(TopologyError, match=":1:"):
        load_topology(write(tmp_path, "a b x\n"))


def test_duplicate_edges_keep_first_with_warning(tmp_path):
    with pytest.warns(UserWarning, match="duplicate"):
        topo = load_topology(write(tmp_path, "0 1 2.0\n1 0 5.0\n1 2 1.0\n"))
    assert topo.weight_map()[(0, 1)] == 2.0
    assert topo.edge_count == 2


def test_generate_mid_size():
    topo = generate_topology(100, 4, seed=7)
    assert topo.n == 100
    assert 190 <= topo.edge_count <= 210
    assert bfs_reaches_all(topo)
    assert topo.connected
    assert abs(topo.average_degree - 4) <= 0.4


def test_generate_triangle():
    topo = generate_topology(3, 2, seed=1)
    assert topo.edges == ((0, 1), (0, 2), (1, 2))


def test_generate_is_deterministic():
    assert generate_topology(100, 4, 7).edges == generate_topology(100, 4, 7).edges
    assert generate_topology(100, 4, 7).edges != generate_topology(100, 4, 8).edges


@pytest.mark.parametrize("n,deg", [(2, 2), (10, 1.5), (10, 9), (5, 4.5)])
def test_generate_rejects_unreachable_degree(n, deg):
    with pytest.raises(TopologyError):
        generate_topology(n, deg, 0)


def test_unweighted_regime():
    topo = assign_link_metrics(generate_topology(3, 2, 1), LinkMetricRegime("unweighted"), 0)
    assert topo.weights == (1.0, 1.0, 1.0)


def test_uniform_regime_range_and_determinism():
    base = generate_topology(60, 4, 3)
    regime = LinkMetricRegime(RegimeKind.UNIFORM, 1, 10)
    a = assign_link_metrics(base, regime, 5)
    b = assign_link_metrics(base, regime, 5)
    assert all(1 <= w <= 10 for w in a.weights)
    assert a.weights == b.weights
    assert a.weights != assign_link_metrics(base, regime, 6).weights


def test_from_file_regime_needs_weights(tmp_path):
    unweighted = load_topology(write(tmp_path, "0 1\n1 2\n"))
    with pytest.raises(TopologyError):
        assign_link_metrics(unweighted, LinkMetricRegime("from_file"), 0)
    weighted = load_topology(write(tmp_path, "0 1 3\n1 2 4\n", "w.txt"))
    assert assign_link_metrics(weighted, LinkMetricRegime("from_file"), 0) is weighted


def test_regime_parse():
    assert LinkMetricRegime.parse("uniform:2:5") == LinkMetricRegime(RegimeKind.UNIFORM, 2, 5)
    assert LinkMetricRegime.parse("UNWEIGHTED").kind is RegimeKind.UNWEIGHTED
    assert str(LinkMetricRegime()) == "uniform:1:10"


def test_invariants_enforced():
    with pytest.raises(TopologyError):
        Topology(3, ((0, 1), (0, 1)), (1.0, 1.0))
    with pytest.raises(TopologyError):
        Topology(3, ((0, 1),), (0.0,))
    assert not Topology(4, ((0, 1), (2, 3)), (1.0, 1.0)).connected


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 40), extra=st.floats(0, 1), seed=st.integers(0, 10_000), metric_seed=st.integers(0, 100))
def test_save_load_roundtrip(tmp_path_factory, n, extra, seed, metric_seed):
    deg = 2 + extra * 0.99 * (n - 3)
    topo = generate_topology(n, deg, seed)
    # weights survive the 6-significant-digit format only if they already fit in it
    weights = tuple(float(f"{w:.6g}") for w in np.random.default_rng(metric_seed).uniform(1, 10, topo.edge_count))
    topo = Topology(topo.n, topo.edges, weights)
    path = tmp_path_factory.mktemp("rt") / "g.txt"
    save_topology(topo, path)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = load_topology(path)
    assert (back.n, back.edges, back.weights) == (topo.n, topo.edges, topo.weights)
    assert back.edge_count == len(back.edges)
    assert back.average_degree == pytest.approx(2 * len(back.edges) / back.n)
    assert bfs_reaches_all(topo)
