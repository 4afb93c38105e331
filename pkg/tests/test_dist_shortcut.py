import random

import pytest
from hypothesis import given, settings, strategies as st

from cmproute.dist import ProtocolError, ShortcutMachine, dist_shortcut
from cmproute.dist.shortcut import _ShortcutNode
from cmproute.primitives import LabeledPath, shortcut_path, shortcut_survivors
from cmproute.simnet import Network, ScheduleModel, run_until_quiescent

from conftest import random_walk

SCHEDULES = [ScheduleModel("unit"), ScheduleModel("random", 1), ScheduleModel("fifo", 2)]


def path_of(walk):
    return LabeledPath.from_walk(walk, range(len(walk) - 1))


def expected_messages(walk, closed, protect_terminal=True):
    """One token message per step, plus a predecessor rewire for every removed
    occurrence unless that predecessor is the removed vertex itself."""
    keep = shortcut_survivors(walk, closed, walk[-1], protect_terminal)
    extra = 0
    pred = None
    for v, kept in zip(walk, keep):
        if kept:
            pred = v
        elif pred != v:
            extra += 1
    return len(walk) - 1 + extra


def test_simple_path_only_tokens():
    p = path_of([4, 0, 3, 1, 2])
    out, m = dist_shortcut(p)
    assert out.live_view() == p.live_view()
    assert m.messages_sent == 4 == m.by_tag["M"]


def test_phase1_shape_hand_trace():
    d, a, t = 0, 1, 2
    p = path_of([d, a, d, t])
    out, m = dist_shortcut(p)
    assert out.vertices() == [d, a, t]
    assert out.live_view() == shortcut_path(p).live_view()
    # d->a M, a->d M, then d cuts itself out: R id0 to a and R id1 to t
    assert [(x.src, x.dst, x.tag) for x in m.trace] == [(d, a, "M"), (a, d, "M"), (d, a, "R"), (d, t, "R")]
    assert [x.payload[3] for x in m.trace[2:]] == [0, 1]


def test_self_predecessor_case_is_local():
    walk = [0, 1, 0, 1, 2]
    p = path_of(walk)
    out, m = dist_shortcut(p)
    assert out.vertices() == [0, 1, 2]
    assert m.messages_sent == expected_messages(walk, False) == 5


def test_cycle_start_closes_once():
    walk = [0, 1, 0, 2, 0]
    out, m = dist_shortcut(path_of(walk))
    assert out.vertices() == [0, 1, 2, 0]
    assert m.messages_sent == expected_messages(walk, True)


def test_unprotected_terminal():
    walk = [0, 2, 1, 2]
    p = path_of(walk)
    out, _ = dist_shortcut(p, protect_terminal=False)
    assert out.vertices() == shortcut_path(p, protect_terminal=False).vertices() == walk


def test_missing_next_label_detected():
    # vertex 1 holds only an incoming label, so it cannot forward the token
    p = path_of([0, 1, 2])
    broken = dict(p.adj)
    broken[1] = broken[1][:1]
    with pytest.raises(ProtocolError, match="node 1: missing next label 2"):
        dist_shortcut(LabeledPath(broken, 0, 2))


def test_rejects_dead_entries():
    p = shortcut_path(path_of([0, 1, 0, 2]))
    with pytest.raises(ValueError):
        dist_shortcut(p)


class Watched(_ShortcutNode):
    """Records (cnt, vis) after every event so monotonicity can be checked."""

    def __init__(self, v, machine):
        super().__init__(v, machine)
        self.history = []

    def on_wake(self, ctx):
        super().on_wake(ctx)
        self.history.append((self.machine.cnt, self.machine.vis))

    def on_message(self, ctx, src, tag, payload):
        super().on_message(ctx, src, tag, payload)
        self.history.append((self.machine.cnt, self.machine.vis))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10**9), verts=st.integers(2, 7), steps=st.integers(1, 25),
       closed=st.booleans(), sched=st.integers(0, 2))
def test_matches_centralized_and_exact_count(seed, verts, steps, closed, sched):
    rng = random.Random(seed)
    walk = random_walk(rng, verts, steps, closed)
    p = path_of(walk)
    schedule = ScheduleModel(SCHEDULES[sched].kind, seed)
    out, m = dist_shortcut(p, schedule=schedule)
    ref = shortcut_path(p)
    assert out.live_view() == ref.live_view()
    assert out.vertices() == ref.vertices()
    assert m.messages_sent == expected_messages(walk, p.closed)
    assert m.messages_sent <= 2 * (len(walk) - 1)


@pytest.mark.parametrize("seed", range(30))
def test_cnt_and_vis_monotone(seed):
    rng = random.Random(seed)
    walk = random_walk(rng, 6, 20, closed=seed % 2 == 0)
    p = path_of(walk)
    closed = p.closed
    nodes = [Watched(v, ShortcutMachine(v, es, first=v == p.start, end=v == p.end,
                                        terminal=not closed and v == p.end))
             for v, es in sorted(p.adj.items())]
    run_until_quiescent(Network.complete(nodes), ScheduleModel("random", seed))
    for nd in nodes:
        cnts = [c for c, _ in nd.history]
        vis = [x for _, x in nd.history]
        assert cnts == sorted(cnts) and cnts[-1] <= nd.machine.n_labels
        assert vis == sorted(vis)
