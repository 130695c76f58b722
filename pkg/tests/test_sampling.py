import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutomo.routing import route_all_pairs
from neutomo.sampling import (
    MeasurementSet,
    SamplingError,
    monitors_needed,
    sample,
    sample_monitor_based,
    sample_random,
)
from neutomo.topology import generate_topology


def table(n, deg=2.5, seed=0):
    return route_all_pairs(generate_topology(n, deg, seed), "mhr", "additive")


def check_partition(ms, gt):
    measured = {tuple(p) for p in ms.measured_pairs.tolist()}
    held = {tuple(p) for p in ms.heldout_pairs.tolist()}
    assert not measured & held
    assert measured | held == {tuple(p) for p in gt.pairs.tolist()}
    assert ms.covered_nodes() == set(range(gt.n))


def test_random_small_example():
    gt = table(5)
    ms = sample_random(gt, 0.3, seed=1)
    assert len(ms.measured_pairs) == 3
    check_partition(ms, gt)


def test_random_near_full_ratio():
    gt = table(12)
    ms = sample_random(gt, 0.999, seed=0)
    assert len(ms.measured_pairs) == len(gt.pairs)
    check_partition(ms, gt)


def test_random_is_deterministic():
    gt = table(30)
    a, b = sample_random(gt, 0.25, 4), sample_random(gt, 0.25, 4)
    assert np.array_equal(a.measured_pairs, b.measured_pairs)
    assert not np.array_equal(a.measured_pairs, sample_random(gt, 0.25, 5).measured_pairs)


def test_random_values_follow_table():
    gt = table(20)
    ms = sample_random(gt, 0.3, 2)
    for (u, v), val in zip(ms.measured_pairs, ms.measured_values):
        assert gt.lookup(u, v)[1] == val


@pytest.mark.parametrize("n", [7, 8, 9, 10, 11])
def test_random_tight_ratio_needs_matching(n):
    # the smallest feasible sample is a (near-)perfect matching of the nodes
    gt = table(n)
    size = (n + 1) // 2
    for seed in range(20):
        ms = sample_random(gt, size / len(gt.pairs), seed)
        assert len(ms.measured_pairs) == size
        check_partition(ms, gt)


def test_random_rejects_infeasible_ratio():
    with pytest.raises(SamplingError):
        sample_random(table(10), 0.05, 0)
    with pytest.raises(SamplingError):
        sample_random(table(10), 1.0, 0)


def test_monitor_pair_count_formula():
    assert monitors_needed(5, 7) == 2
    assert 2 * 5 - 2 * 3 // 2 == 7
    assert monitors_needed(5, 3) == 1


def test_monitor_small_example():
    gt = table(5)
    ms = sample_monitor_based(gt, 0.3, seed=3)
    assert len(ms.measured_pairs) == 3
    check_partition(ms, gt)
    # one monitor cannot cover five nodes with three pairs, so a second is added
    assert len(ms.monitors) == 2
    mon = set(ms.monitors)
    assert all(u in mon or v in mon for u, v in ms.measured_pairs.tolist())


def test_monitor_based_mid_size():
    gt = table(100, 4, 1)
    ms = sample_monitor_based(gt, 0.3, seed=2)
    assert len(ms.monitors) == monitors_needed(100, 1485) == 17
    assert len(ms.measured_pairs) == 1485
    check_partition(ms, gt)


def test_dispatch_and_csv_roundtrip(tmp_path):
    gt = table(15)
    ms = sample(gt, "monitor", 0.3, 0)
    ms.to_csv(tmp_path)
    assert (tmp_path / "measured.csv").read_text().splitlines()[0] == "u,v,metric"
    back = MeasurementSet.from_csv(tmp_path, n=15)
    assert np.array_equal(back.measured_pairs, ms.measured_pairs)
    assert np.array_equal(back.heldout_values, ms.heldout_values)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(6, 40),
    ratio=st.floats(0.15, 0.95),
    seed=st.integers(0, 1000),
    method=st.sampled_from(["random", "monitor"]),
)
def test_sampling_invariants(n, ratio, seed, method):
    gt = table(n, 2.5 if n > 4 else 2, seed)
    total = len(gt.pairs)
    if np.floor(ratio * total + 0.5) < n / 2:
        with pytest.raises(SamplingError):
            sample(gt, method, ratio, seed)
        return
    ms = sample(gt, method, ratio, seed)
    check_partition(ms, gt)
    assert abs(len(ms.measured_pairs) - ratio * total) <= 1
    if method == "monitor":
        mon = set(ms.monitors)
        assert all(u in mon or v in mon for u, v in ms.measured_pairs.tolist())
