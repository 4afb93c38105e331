"""Graph building blocks shared by the centralized and distributed solvers.

Everything here breaks ties by edge id, so two runs over the same input (or a
centralized and a distributed run) produce the same trees, walks and labels.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Callable, Iterable, NamedTuple

from scipy.cluster.hierarchy import DisjointSet

from .instance import edge_id as _edge_id

WeightFn = Callable[[int, int], float]


class TreeEdge(NamedTuple):
    u: int
    v: int
    weight: float  # weight the tree was built under (overlay included)
    eid: int


def edge_key(weight: float, forced: bool, eid: int) -> tuple:
    """Total order on edges: forced-zero pairs first, then (weight, id)."""
    return (0.0, 0, eid) if forced else (float(weight), 1, eid)


def mst(vertices: Iterable[int], weight: WeightFn, forced_zero=(), *, n: int | None = None) -> list[TreeEdge]:
    """Kruskal MST of the complete graph on ``vertices``.

    Pairs in ``forced_zero`` are weighted 0 and ordered before every other
    edge, so they are always taken unless they close a cycle.  ``n`` fixes the
    edge-id numbering and defaults to ``max(vertices) + 1``.
    """
    verts = sorted(set(vertices))
    if not verts:
        raise ValueError("mst of an empty vertex set")
    if n is None:
        n = verts[-1] + 1
    forced = {frozenset(p) for p in forced_zero}
    cand = []
    for a, b in combinations(verts, 2):
        eid = _edge_id(a, b, n)
        cand.append((edge_key(weight(a, b), frozenset((a, b)) in forced, eid), a, b))
    cand.sort()
    ds = DisjointSet(verts)
    tree = []
    for key, a, b in cand:
        if ds.merge(a, b):
            tree.append(TreeEdge(a, b, key[0], key[2]))
            if len(tree) == len(verts) - 1:
                break
    return tree


def tree_cost(tree: Iterable[TreeEdge], weight: WeightFn | None = None) -> float:
    if weight is None:
        return float(sum(e.weight for e in tree))
    return float(sum(weight(e.u, e.v) for e in tree))


# -- multigraphs -----------------------------------------------------------------

class MultiEdge(NamedTuple):
    u: int
    v: int
    weight: float
    eid: int


@dataclass(frozen=True)
class MultiGraph:
    vertices: frozenset[int]
    edges: tuple[MultiEdge, ...]

    def degree(self, v: int) -> int:
        return sum((e.u == v) + (e.v == v) for e in self.edges)

    def degrees(self) -> Counter:
        deg = Counter({v: 0 for v in self.vertices})
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return deg

    def odd_vertices(self) -> list[int]:
        return sorted(v for v, d in self.degrees().items() if d % 2)

    def incident(self) -> dict[int, list[tuple[int, int]]]:
        """Per vertex, its (edge id, other endpoint) pairs sorted by edge id."""
        inc = {v: [] for v in self.vertices}
        for e in self.edges:
            inc[e.u].append((e.eid, e.v))
            inc[e.v].append((e.eid, e.u))
        for lst in inc.values():
            lst.sort()
        return inc


def double_edges(tree: Iterable[TreeEdge], drop_one_copy_of=None, *, offset: int) -> MultiGraph:
    """Two copies of every tree edge (ids ``eid`` and ``eid + offset``).

    With ``drop_one_copy_of`` the named pair keeps only its ``eid`` copy.
    """
    tree = list(tree)
    drop = frozenset(drop_one_copy_of) if drop_one_copy_of is not None else None
    if drop is not None and not any(frozenset((e.u, e.v)) == drop for e in tree):
        raise ValueError(f"pair {tuple(sorted(drop))} is not an edge of the tree")
    edges = []
    verts = set()
    for e in tree:
        verts.update((e.u, e.v))
        edges.append(MultiEdge(e.u, e.v, e.weight, e.eid))
        if frozenset((e.u, e.v)) != drop:
            edges.append(MultiEdge(e.u, e.v, e.weight, e.eid + offset))
    edges.sort(key=lambda m: m.eid)
    return MultiGraph(frozenset(verts), tuple(edges))


# -- labeled paths ---------------------------------------------------------------

@dataclass(frozen=True)
class PathEntry:
    """One endpoint of a path edge as stored at a vertex."""

    label: int
    neighbor: int
    key: int
    out: bool
    alive: bool = True

    def view(self) -> tuple:
        return (self.label, self.neighbor, self.key, self.out)


@dataclass(frozen=True)
class LabeledPath:
    """Per-vertex labeled edge lists describing a walk from ``start`` to ``end``.

    Labels at a vertex count its edge endpoints in traversal order starting at
    1.  Entries are never renumbered: shortcutting kills entries and rewires
    the survivors, and only live entries take part in a walk.
    """

    adj: dict[int, tuple[PathEntry, ...]]
    start: int
    end: int

    @classmethod
    def from_walk(cls, vertices, keys) -> LabeledPath:
        vertices = list(vertices)
        keys = list(keys)
        if not vertices:
            raise ValueError("a walk needs at least one vertex")
        if len(keys) != len(vertices) - 1:
            raise ValueError("need exactly one key per step of the walk")
        adj: dict[int, list[PathEntry]] = defaultdict(list)
        adj[vertices[0]]
        last = len(vertices) - 1
        for i, v in enumerate(vertices):
            if i > 0:
                adj[v].append(PathEntry(len(adj[v]) + 1, vertices[i - 1], keys[i - 1], False))
            if i < last:
                adj[v].append(PathEntry(len(adj[v]) + 1, vertices[i + 1], keys[i], True))
        return cls({v: tuple(es) for v, es in sorted(adj.items())}, vertices[0], vertices[-1])

    @property
    def closed(self) -> bool:
        return self.start == self.end and self.edge_count > 0

    @property
    def edge_count(self) -> int:
        return sum(e.out and e.alive for es in self.adj.values() for e in es)

    def _steps(self):
        """Live walk as (vertex, in-entry, out-entry) occurrences."""
        outs = [e for e in self.adj.get(self.start, ()) if e.alive and e.out]
        if not outs:
            return [(self.start, None, None)]
        cur = min(outs, key=lambda e: e.label)
        occ = [(self.start, None, cur)]
        limit = sum(len(es) for es in self.adj.values())
        while True:
            v = cur.neighbor
            inn = [e for e in self.adj.get(v, ()) if e.alive and not e.out and e.key == cur.key]
            if len(inn) != 1:
                raise ValueError(f"broken path: vertex {v} has {len(inn)} live entries for edge {cur.key}")
            inn = inn[0]
            nxt = [e for e in self.adj[v] if e.alive and e.out and e.label > inn.label]
            if not nxt:
                occ.append((v, inn, None))
                return occ
            cur = min(nxt, key=lambda e: e.label)
            occ.append((v, inn, cur))
            if len(occ) > limit:
                raise ValueError("path labels do not terminate")

    def walk(self) -> tuple[list[int], list[int]]:
        """Vertices and edge keys of the live walk, in order."""
        occ = self._steps()
        return [v for v, _, _ in occ], [o.key for _, _, o in occ[:-1]]

    def vertices(self) -> list[int]:
        return self.walk()[0]

    def live_view(self) -> dict[int, tuple]:
        return {v: tuple(e.view() for e in es if e.alive) for v, es in self.adj.items()}

    def dump(self) -> str:
        lines = []
        for v in sorted(self.adj):
            for e in self.adj[v]:
                if e.alive:
                    lines.append(f"{v}:{e.label}→{e.neighbor}")
        return "\n".join(lines)


def path_cost(p: LabeledPath, weight: WeightFn) -> float:
    verts, _ = p.walk()
    return float(sum(weight(a, b) for a, b in zip(verts, verts[1:])))


def walk_cost(vertices, weight: WeightFn) -> float:
    return float(sum(weight(a, b) for a, b in zip(vertices, vertices[1:])))


# -- Euler walks -----------------------------------------------------------------

class EulerError(ValueError):
    pass


def _hierholzer(g: MultiGraph, start: int, end: int) -> LabeledPath:
    odd = g.odd_vertices()
    expect = [] if start == end else sorted((start, end))
    if odd != expect:
        raise EulerError(f"parity violation: odd-degree vertices {odd}, expected {expect}")
    inc = g.incident()
    if start not in inc or not inc[start]:
        if g.edges:
            raise EulerError(f"start vertex {start} has no edges")
        return LabeledPath.from_walk([start], [])
    used = set()
    ptr = defaultdict(int)
    stack: list[tuple[int, int | None]] = [(start, None)]
    popped: list[tuple[int, int | None]] = []
    while stack:
        v, _ = stack[-1]
        lst = inc[v]
        while ptr[v] < len(lst) and lst[ptr[v]][0] in used:
            ptr[v] += 1
        if ptr[v] < len(lst):
            eid, u = lst[ptr[v]]
            used.add(eid)
            stack.append((u, eid))
        else:
            if not popped and v != end:
                raise EulerError(f"walk got stuck at {v} before reaching {end}")
            popped.append(stack.pop())
    if len(used) != len(g.edges):
        raise EulerError("multigraph is disconnected")
    verts = [v for v, _ in reversed(popped)]
    keys = [e for _, e in reversed(popped[:-1])]
    return LabeledPath.from_walk(verts, keys)


def euler_path(g: MultiGraph, start: int, end: int) -> LabeledPath:
    """Hierholzer walk from ``start`` to ``end`` using every edge once.

    The walk always leaves a vertex by its smallest unused edge id.
    """
    return _hierholzer(g, start, end)


def euler_tour(g: MultiGraph, start: int) -> LabeledPath:
    return _hierholzer(g, start, start)


# -- shortcutting ----------------------------------------------------------------

def shortcut_survivors(vertices, closed: bool, end: int, protect_terminal: bool = True) -> list[bool]:
    """Which occurrences of a walk survive repeated shortcutting."""
    visited = set()
    if protect_terminal and not closed:
        visited.add(end)
    last = len(vertices) - 1
    keep = []
    for i, v in enumerate(vertices):
        if i == 0 or i == last:
            keep.append(True)
        else:
            keep.append(v not in visited)
        visited.add(v)
    return keep


def shortcut_path(p: LabeledPath, protect_terminal: bool = True) -> LabeledPath:
    """Shortcut every repeated vertex of ``p`` so each vertex appears once.

    The first visit of a vertex survives, except that the terminal of an open
    path (with ``protect_terminal``) survives only as the final vertex.  A
    closed tour keeps its start at both ends.  A surviving edge (u, w) keeps
    u's outgoing label and key and w's incoming label; w's entry takes u's key.
    """
    occ = p._steps()
    verts = [v for v, _, _ in occ]
    keep = shortcut_survivors(verts, p.closed, p.end, protect_terminal)
    dead: set[tuple[int, int]] = set()
    patch: dict[tuple[int, int], PathEntry] = {}
    prev = None
    for (v, inn, out), kept in zip(occ, keep):
        if not kept:
            for e in (inn, out):
                dead.add((v, e.label))
            continue
        if prev is not None:
            pv, pout = prev
            patch[(pv, pout.label)] = replace(pout, neighbor=v)
            patch[(v, inn.label)] = replace(inn, neighbor=pv, key=pout.key)
        if out is not None:
            prev = (v, out)
    adj = {}
    for v, es in p.adj.items():
        new = []
        for e in es:
            if (v, e.label) in dead:
                new.append(replace(e, alive=False))
            else:
                new.append(patch.get((v, e.label), e))
        adj[v] = tuple(new)
    return LabeledPath(adj, p.start, p.end)


# -- forests -----------------------------------------------------------------------

@dataclass(frozen=True)
class SpanningForest:
    """Trees indexed by salesman: tree i holds depot i."""

    trees: tuple[tuple[TreeEdge, ...], ...]
    vertex_sets: tuple[frozenset[int], ...]
