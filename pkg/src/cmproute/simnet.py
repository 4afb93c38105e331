"""Deterministic discrete-event simulator for asynchronous message passing.

Nodes are event-driven state machines.  Every node is woken once at time 0
(in id order); after that a node only runs when a message is delivered to it.
Each message travels over a link of the topology with a delay in (0, 1]
drawn from the schedule, and ties in delivery time are broken by the order in
which messages were sent, so a (network, schedule) pair fixes the whole run.
"""

from __future__ import annotations

import copy
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable

DEFAULT_MAX_EVENTS = 5_000_000


class SimulationError(RuntimeError):
    pass


class EventCeilingExceeded(SimulationError):
    pass


class TraceMismatch(SimulationError):
    pass


class SimNode:
    """Base class for protocol nodes.

    Subclasses override ``on_wake`` and ``on_message`` and send through the
    context.  Handlers must not block; all waiting lives in node state.
    """

    def __init__(self, node_id: int):
        self.node_id = node_id
        self.state: Any = None

    def on_wake(self, ctx: Context) -> None:
        pass

    def on_message(self, ctx: Context, src: int, tag: str, payload: Any) -> None:
        pass

    def snapshot(self) -> Any:
        return copy.deepcopy(self.state)


class Context:
    __slots__ = ("node_id", "now", "outbox")

    def __init__(self, node_id: int, now: float):
        self.node_id = node_id
        self.now = now
        self.outbox: list[tuple[int, str, Any]] = []

    def send(self, dst: int, tag: str, payload: Any = None) -> None:
        self.outbox.append((dst, tag, payload))


SCHEDULE_KINDS = ("unit", "random", "fifo")


@dataclass(frozen=True)
class ScheduleModel:
    """Delay model for message delivery.

    ``unit``: every message takes exactly 1.  ``random``: independent uniform
    delays in (0, 1]; links are not FIFO except for tags in ``fifo_tags``.
    ``fifo``: adversarial delays (near-instant or the full unit, at random)
    with per-link FIFO for every tag.
    """

    kind: str = "unit"
    seed: int = 0
    fifo_tags: frozenset = frozenset({"GHS"})

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")

    def delay(self, rng: random.Random) -> float:
        if self.kind == "unit":
            return 1.0
        if self.kind == "random":
            return 1.0 - rng.random()
        return 1.0 if rng.random() < 0.5 else 0.05 * (1.0 - rng.random())

    def is_fifo(self, tag: str) -> bool:
        return self.kind != "random" or tag in self.fifo_tags


@dataclass(frozen=True)
class Delivery:
    time: float
    seq: int
    src: int
    dst: int
    tag: str
    payload: Any
    sent_at: float

    def dump(self) -> str:
        return f"t={self.time!r} seq={self.seq} {self.src}->{self.dst} tag={self.tag} payload={self.payload!r}"


@dataclass
class SimMetrics:
    messages_sent: int = 0
    messages_delivered: int = 0
    by_tag: dict[str, int] = field(default_factory=dict)
    quiescence_time: float = 0.0
    trace: list[Delivery] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "messages": self.messages_sent,
            "by_tag": dict(sorted(self.by_tag.items())),
            "quiescence_time": self.quiescence_time,
        }

    def dump_trace(self) -> str:
        return "\n".join(d.dump() for d in self.trace)

    def messages_excluding(self, *tags: str) -> int:
        return self.messages_sent - sum(self.by_tag.get(t, 0) for t in tags)


class Network:
    def __init__(self, vertices: Iterable[int], edges: Iterable[tuple[int, int]], nodes: Iterable[SimNode]):
        self.vertices = sorted(set(vertices))
        self.links = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            self.links.add(frozenset((u, v)))
        self.nodes: dict[int, SimNode] = {}
        for node in nodes:
            if node.node_id in self.nodes:
                raise ValueError(f"duplicate node id {node.node_id}")
            self.nodes[node.node_id] = node
        if set(self.nodes) != set(self.vertices):
            raise ValueError("need exactly one node per vertex")

    @classmethod
    def complete(cls, nodes: Iterable[SimNode]) -> Network:
        nodes = list(nodes)
        ids = [n.node_id for n in nodes]
        edges = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]
        return cls(ids, edges, nodes)

    def check_link(self, src: int, dst: int) -> None:
        if frozenset((src, dst)) not in self.links:
            raise SimulationError(f"node {src} sent on non-existent edge ({src}, {dst})")

    def snapshot(self) -> dict[int, Any]:
        return {v: self.nodes[v].snapshot() for v in self.vertices}


def build_network(vertices, edges, nodes) -> Network:
    return Network(vertices, edges, nodes)


@dataclass
class RunResult:
    metrics: SimMetrics
    states: dict[int, Any]


def run_until_quiescent(net: Network, schedule: ScheduleModel = ScheduleModel(),
                        max_events: int = DEFAULT_MAX_EVENTS) -> RunResult:
    """Wake every node at time 0 and deliver messages until none are in flight."""
    rng = random.Random(schedule.seed)
    metrics = SimMetrics()
    queue: list[tuple[float, int, Delivery]] = []
    last_on_link: dict[tuple[int, int], float] = {}
    seq = 0

    def post(src: int, now: float, outbox):
        nonlocal seq
        for dst, tag, payload in outbox:
            net.check_link(src, dst)
            t = now + schedule.delay(rng)
            if schedule.is_fifo(tag):
                t = max(t, last_on_link.get((src, dst), 0.0))
                last_on_link[(src, dst)] = t
            d = Delivery(t, seq, src, dst, tag, payload, now)
            heapq.heappush(queue, (t, seq, d))
            seq += 1
            metrics.messages_sent += 1
            metrics.by_tag[tag] = metrics.by_tag.get(tag, 0) + 1

    for v in net.vertices:
        ctx = Context(v, 0.0)
        net.nodes[v].on_wake(ctx)
        post(v, 0.0, ctx.outbox)

    events = 0
    while queue:
        t, _, d = heapq.heappop(queue)
        events += 1
        if events > max_events:
            raise EventCeilingExceeded(f"more than {max_events} deliveries without quiescence")
        metrics.trace.append(d)
        metrics.messages_delivered += 1
        metrics.quiescence_time = t
        ctx = Context(d.dst, t)
        net.nodes[d.dst].on_message(ctx, d.src, d.tag, d.payload)
        post(d.dst, t, ctx.outbox)
    metrics.by_tag = dict(sorted(metrics.by_tag.items()))
    return RunResult(metrics, net.snapshot())


def replay(net: Network, trace: list[Delivery]) -> dict[int, Any]:
    """Re-run a fresh network by delivering messages in the recorded order.

    Every send made during the replay must be matched by exactly one trace
    entry with the same sequence number, endpoints, tag and payload.
    """
    pending: dict[int, tuple] = {}
    seq = 0

    def post(src: int, outbox):
        nonlocal seq
        for dst, tag, payload in outbox:
            net.check_link(src, dst)
            pending[seq] = (src, dst, tag, payload)
            seq += 1

    for v in net.vertices:
        ctx = Context(v, 0.0)
        net.nodes[v].on_wake(ctx)
        post(v, ctx.outbox)
    for d in trace:
        expect = pending.pop(d.seq, None)
        if expect != (d.src, d.dst, d.tag, d.payload):
            raise TraceMismatch(f"trace entry seq={d.seq} does not match the replayed run")
        ctx = Context(d.dst, d.time)
        net.nodes[d.dst].on_message(ctx, d.src, d.tag, d.payload)
        post(d.dst, ctx.outbox)
    if pending:
        raise TraceMismatch(f"trace ends with {len(pending)} messages still in flight")
    return net.snapshot()


def metrics_json(metrics: SimMetrics) -> str:
    return json.dumps(metrics.to_json(), sort_keys=True)
