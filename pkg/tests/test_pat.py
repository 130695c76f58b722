import numpy as np
import pytest
from oracles import brute_force_best_value, random_small_graph

from neutomo.neural import PathMetricRegressor
from neutomo.pat import PATRegressor, build_measurement_graph, initial_estimates, soft_update
from neutomo.routing import all_pairs, route_all_pairs
from neutomo.sampling import sample_random
from neutomo.topology import LinkMetricRegime, assign_link_metrics, generate_topology

A, B, C, D = 0, 1, 2, 3


def test_measurement_graph_from_pairs():
    g = build_measurement_graph(np.array([[A, B], [B, C]]), [2.0, 3.0], n=3)
    assert g.graph.weight_map() == {(A, B): 2.0, (B, C): 3.0}
    assert len(set(g.component)) == 1


def test_measurement_graph_complete():
    pairs = all_pairs(5)
    g = build_measurement_graph(pairs, np.ones(len(pairs)), n=5)
    assert g.graph.edge_count == 10


@pytest.mark.parametrize("semantics,expected", [("additive", 5.0), ("congestion", 3.0)])
def test_initial_estimate_single_path(semantics, expected):
    g = build_measurement_graph(np.array([[A, B], [B, C]]), [2.0, 3.0], n=3)
    est = initial_estimates(g, semantics, [[A, C]])
    assert est.values.tolist() == [expected]
    assert est.provenance().tolist() == ["pat"]


def test_cross_component_pair_is_unreachable():
    g = build_measurement_graph(np.array([[A, B], [C, D]]), [1.0, 1.0], n=4)
    est = initial_estimates(g, "additive", [[A, C], [B, D]])
    assert not est.reachable.any()
    assert np.isnan(est.values).all()
    assert est.provenance().tolist() == ["model", "model"]


@pytest.mark.parametrize(
    "beta,old,new,expected",
    [(0.6, 5.0, 10.0, 7.0), (0.0, 5.0, 10.0, 10.0), (0.6, np.array([1.0, 9.0]), np.array([3.0, 1.0]), [1.8, 5.8])],
)
def test_soft_update(beta, old, new, expected):
    assert np.allclose(soft_update(old, new, beta), expected)


def test_initial_estimates_match_brute_force():
    rng = np.random.default_rng(17)
    for trial in range(100):
        # measurement graphs may be disconnected
        g_topo = random_small_graph(rng, n_max=8, connected=trial % 2 == 0)
        n = g_topo.n
        pairs = np.array(g_topo.edges)
        g = build_measurement_graph(pairs, g_topo.weights, n=n)
        measured = set(g_topo.edges)
        unmeasured = [p for p in map(tuple, all_pairs(n).tolist()) if p not in measured]
        for semantics in ("additive", "congestion"):
            est = initial_estimates(g, semantics, unmeasured)
            for (u, v), val in zip(est.pairs.tolist(), est.values):
                ref = brute_force_best_value(n, g_topo.edges, g_topo.weights, semantics, u, v)
                if ref is None:
                    assert np.isnan(val)
                else:
                    assert val == ref


@pytest.fixture(scope="module")
def small_problem():
    topo = assign_link_metrics(generate_topology(20, 3, 0), LinkMetricRegime(), 1)
    gt = route_all_pairs(topo, "bpr", "additive")
    return sample_random(gt, 0.3, 2)


def quick_model(**kw):
    return PathMetricRegressor(epochs=120, **kw)


def test_pat_counts_and_estimate_bounds(small_problem):
    ms = small_problem
    pat = PATRegressor(quick_model(), alpha=0.15, n_iterations=3, min_epochs=10, random_state=0)
    pat.fit(ms.measured_pairs, ms.measured_values, n_nodes=ms.n)
    n_unmeasured = len(ms.heldout_pairs)
    assert pat.augmented_counts_ == [int(np.floor(0.15 * n_unmeasured))] * 3
    assert pat.model_.epochs_trained_ == 3 * max(10, 120 // 3)
    assert np.isfinite(pat.estimates_.values).all()
    values, provenance = pat.predict_with_provenance(ms.heldout_pairs)
    assert set(provenance) <= {"pat", "model"}
    # a measured pair is not in the estimate table, so it falls back to the network
    _, src = pat.predict_with_provenance(ms.measured_pairs[:3])
    assert src.tolist() == ["model"] * 3


def test_pat_update_is_convex_combination(small_problem):
    ms = small_problem
    one = PATRegressor(quick_model(), n_iterations=1, min_epochs=10, beta=0.6).fit(ms.measured_pairs, ms.measured_values, n_nodes=ms.n)
    nt = one.model_.predict(one.estimates_.pairs)
    expected = 0.6 * one.initial_estimates_ + 0.4 * nt
    assert np.allclose(one.estimates_.values, expected)
    lo = np.minimum(one.initial_estimates_, nt)
    hi = np.maximum(one.initial_estimates_, nt)
    assert ((one.estimates_.values >= lo - 1e-12) & (one.estimates_.values <= hi + 1e-12)).all()


def test_pat_with_no_augmentation_matches_plain_training(small_problem):
    ms = small_problem
    plain = quick_model(n_nodes=ms.n).fit(ms.measured_pairs, ms.measured_values)
    pat = PATRegressor(quick_model(), alpha=0.0, beta=0.0, n_iterations=1, min_epochs=1).fit(
        ms.measured_pairs, ms.measured_values, n_nodes=ms.n
    )
    assert pat.augmented_counts_ == [0]
    assert np.array_equal(pat.predict(ms.heldout_pairs), plain.predict(ms.heldout_pairs))


def test_pat_reset_model_flag(small_problem):
    ms = small_problem
    pat = PATRegressor(quick_model(), n_iterations=2, min_epochs=10, reset_model=True)
    pat.fit(ms.measured_pairs, ms.measured_values, n_nodes=ms.n)
    assert pat.model_.epochs_trained_ == 60


def test_pat_is_deterministic(small_problem):
    ms = small_problem
    runs = [
        PATRegressor(quick_model(), n_iterations=2, min_epochs=10, random_state=5)
        .fit(ms.measured_pairs, ms.measured_values, n_nodes=ms.n)
        .predict(ms.heldout_pairs)
        for _ in range(2)
    ]
    assert np.array_equal(*runs)


@pytest.mark.parametrize("kw", [{"alpha": 1.0}, {"alpha": -0.1}, {"beta": 1.0}, {"n_iterations": 0}])
def test_pat_rejects_bad_config(small_problem, kw):
    with pytest.raises(ValueError):
        PATRegressor(quick_model(), **kw).fit(small_problem.measured_pairs, small_problem.measured_values)
