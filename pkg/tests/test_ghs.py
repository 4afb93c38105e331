import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmproute.dist import ghs_mst
from cmproute.instance import MetricGraph
from cmproute.primitives import mst
from cmproute.simnet import ScheduleModel

from conftest import random_metric


def pairs(edges):
    return {(min(e.u, e.v), max(e.u, e.v)) for e in edges}


def test_two_participants():
    g = random_metric(2, 0)
    res = ghs_mst([0, 1], g.weight)
    assert pairs(res.branch) == {(0, 1)} and res.core == (0, 1)


def test_single_participant():
    res = ghs_mst([3], lambda a, b: 1.0, n=5)
    assert res.branch == [] and res.core is None and res.metrics.messages_sent == 0


@pytest.mark.parametrize("kind", ["unit", "random", "fifo"])
@pytest.mark.parametrize("seed", range(10))
def test_k5_matches_kruskal(kind, seed):
    g = random_metric(5, seed)
    res = ghs_mst(range(5), g.weight, schedule=ScheduleModel(kind, seed))
    assert pairs(res.branch) == pairs(mst(range(5), g.weight))
    assert res.core in pairs(res.branch)


@pytest.mark.parametrize("n", [3, 4, 6, 9])
def test_all_equal_weights_follow_edge_id_tie_break(n):
    g = MetricGraph(np.ones((n, n)) - np.eye(n))
    for kind in ("unit", "random", "fifo"):
        res = ghs_mst(range(n), g.weight, schedule=ScheduleModel(kind, n))
        assert pairs(res.branch) == pairs(mst(range(n), g.weight)) == {(0, j) for j in range(1, n)}


def test_forced_zero_overlay_and_subset():
    g = random_metric(10, 3)
    members = [1, 3, 4, 7, 9]
    forced = [(3, 9), (1, 7)]
    res = ghs_mst(members, g.weight, forced, n=10, schedule=ScheduleModel("random", 4))
    ref = mst(members, g.weight, forced_zero=forced, n=10)
    assert pairs(res.branch) == pairs(ref)
    assert {(3, 9), (1, 7)} <= pairs(res.branch)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**9), n=st.integers(2, 12), kind=st.sampled_from(["unit", "random", "fifo"]))
def test_matches_kruskal_random(seed, n, kind):
    g = random_metric(n, seed)
    res = ghs_mst(range(n), g.weight, schedule=ScheduleModel(kind, seed))
    assert pairs(res.branch) == pairs(mst(range(n), g.weight))
    assert res.metrics.messages_sent <= 5 * n * np.log2(n) + 2 * n * (n - 1)
