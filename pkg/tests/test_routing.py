import numpy as np
import pytest
from oracles import brute_force_route, random_small_graph

from neutomo.routing import (
    GroundTruthTable,
    RoutingError,
    all_pairs,
    pair_index,
    path_metric,
    route_all_pairs,
)
from neutomo.topology import (
    LinkMetricRegime,
    assign_link_metrics,
    generate_topology,
    topology_from_edges,
)

A, B, C = 0, 1, 2


@pytest.fixture
def triangle():
    return topology_from_edges(3, [(A, B), (B, C), (A, C)], [5.0, 2.0, 7.0])


def test_path_graph_additive():
    topo = topology_from_edges(3, [(A, B), (B, C)], [2.0, 3.0])
    gt = route_all_pairs(topo, "bpr", "additive")
    assert gt.lookup(A, C) == (2, 5.0)


def test_triangle_congestion_bpr_detours(triangle):
    assert route_all_pairs(triangle, "bpr", "congestion").lookup(A, C) == (2, 5.0)


def test_triangle_mhr_takes_direct_link(triangle):
    assert route_all_pairs(triangle, "mhr", "congestion").lookup(A, C) == (1, 7.0)
    assert route_all_pairs(triangle, "mhr", "additive").lookup(C, A) == (1, 7.0)


@pytest.mark.parametrize(
    "links,semantics,expected",
    [([2, 3], "additive", 5), ([2, 3], "congestion", 3), ([4.5], "additive", 4.5), ([4.5], "congestion", 4.5)],
)
def test_path_metric(links, semantics, expected):
    assert path_metric(links, semantics) == expected


def test_path_metric_empty():
    with pytest.raises(ValueError):
        path_metric([], "additive")


def test_disconnected_rejected():
    topo = topology_from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(RoutingError, match="unreachable"):
        route_all_pairs(topo, "mhr", "additive")


def test_pair_index_matches_all_pairs():
    pairs = all_pairs(7)
    assert np.array_equal(pair_index(pairs[:, 0], pairs[:, 1], 7), np.arange(len(pairs)))
    assert pair_index(5, 2, 7) == pair_index(2, 5, 7)


def test_ties_prefer_smallest_node_sequence():
    # 0-1-3 and 0-2-3 both cost 2; the lexicographically smaller path goes via 1
    topo = topology_from_edges(4, [(0, 2), (2, 3), (0, 1), (1, 3)], [1.0, 1.0, 1.0, 1.0])
    gt = route_all_pairs(topo, "bpr", "additive")
    assert gt.lookup(0, 3) == (2, 2.0)


@pytest.mark.parametrize("strategy", ["mhr", "bpr"])
@pytest.mark.parametrize("semantics", ["additive", "congestion"])
def test_agrees_with_exhaustive_enumeration(strategy, semantics):
    rng = np.random.default_rng([["mhr", "bpr"].index(strategy), ["additive", "congestion"].index(semantics)])
    for _ in range(40):
        topo = random_small_graph(rng, n_max=7)
        gt = route_all_pairs(topo, strategy, semantics)
        oracle = brute_force_route(topo, strategy, semantics)
        for (u, v), (hops, metric) in oracle.items():
            assert gt.lookup(u, v) == (hops, metric)


def test_float_weights_agree_on_metric():
    rng = np.random.default_rng(11)
    for _ in range(20):
        topo = random_small_graph(rng, n_max=7, int_weights=False)
        for semantics in ("additive", "congestion"):
            gt = route_all_pairs(topo, "bpr", semantics)
            oracle = brute_force_route(topo, "bpr", semantics)
            for (u, v), (_, metric) in oracle.items():
                assert gt.lookup(u, v)[1] == pytest.approx(metric, rel=1e-12)


@pytest.fixture(scope="module")
def mid_graph():
    return assign_link_metrics(generate_topology(40, 4, 2), LinkMetricRegime(), 3)


@pytest.mark.parametrize("semantics", ["additive", "congestion"])
def test_bpr_never_worse_than_mhr(mid_graph, semantics):
    bpr = route_all_pairs(mid_graph, "bpr", semantics)
    mhr = route_all_pairs(mid_graph, "mhr", semantics)
    assert (bpr.metric <= mhr.metric).all()
    assert (mhr.hops <= bpr.hops).all()


def test_mhr_hops_triangle_inequality(mid_graph):
    gt = route_all_pairs(mid_graph, "mhr", "additive")
    n = mid_graph.n
    H = np.zeros((n, n), dtype=int)
    H[gt.pairs[:, 0], gt.pairs[:, 1]] = gt.hops
    H = H + H.T
    assert (H[:, None, :] <= H[:, :, None] + H[None, :, :]).all()


def test_unweighted_additive_metric_is_hop_count():
    topo = generate_topology(30, 3, 4)
    bpr = route_all_pairs(topo, "bpr", "additive")
    mhr = route_all_pairs(topo, "mhr", "additive")
    assert np.array_equal(bpr.metric, mhr.metric)
    assert np.array_equal(mhr.metric, mhr.hops.astype(float))


def test_table_shape_and_csv_roundtrip(mid_graph, tmp_path):
    gt = route_all_pairs(mid_graph, "bpr", "additive")
    assert len(gt) == 40 * 39 // 2
    assert np.isfinite(gt.metric).all() and (gt.hops >= 1).all()
    gt.to_csv(tmp_path / "gt.csv")
    assert (tmp_path / "gt.csv").read_text().splitlines()[0] == "u,v,hops,metric"
    back = GroundTruthTable.from_csv(tmp_path / "gt.csv")
    assert np.array_equal(back.metric, gt.metric) and np.array_equal(back.hops, gt.hops)
