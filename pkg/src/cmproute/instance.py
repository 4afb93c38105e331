"""CMP instances: metric graphs, vertex partitions, routes, and their JSON forms."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

TRIANGLE_RTOL = 1e-9
COST_RTOL = 1e-9


class InstanceFormatError(ValueError):
    """Raised when an instance or solution file does not match its schema."""


class InvalidInstanceError(ValueError):
    """Raised when an instance violates the metric or partition invariants."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        lines = "; ".join(v.message for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"invalid instance: {lines}{more}")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: tuple = ()


def edge_id(i: int, j: int, n: int) -> int:
    """Row-major index of the unordered pair {i, j} among all pairs i < j."""
    if i == j:
        raise ValueError(f"no edge from {i} to itself")
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


class MetricGraph:
    """Complete weighted graph given by a dense symmetric weight matrix.

    The matrix is copied and frozen; ``points`` is kept only when the graph was
    built from planar coordinates, so it can be saved back in point form.
    """

    __slots__ = ("w", "points")

    def __init__(self, weights, points=None):
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {w.shape}")
        w.setflags(write=False)
        self.w = w
        if points is not None:
            points = np.array(points, dtype=float)
            points.setflags(write=False)
        self.points = points

    @classmethod
    def from_points(cls, points) -> MetricGraph:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        diff = pts[:, None, :] - pts[None, :, :]
        w = np.hypot(diff[..., 0], diff[..., 1])
        return cls(w, points=pts)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def edge_count(self) -> int:
        return self.n * (self.n - 1) // 2

    def weight(self, i: int, j: int) -> float:
        return float(self.w[i, j])

    def edge_id(self, i: int, j: int) -> int:
        return edge_id(i, j, self.n)

    def __eq__(self, other):
        if not isinstance(other, MetricGraph):
            return NotImplemented
        if (self.points is None) != (other.points is None):
            return False
        if self.points is not None and not np.array_equal(self.points, other.points):
            return False
        return np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash(self.w.tobytes())

    def __repr__(self):
        kind = "points" if self.points is not None else "matrix"
        return f"MetricGraph(n={self.n}, {kind})"


@dataclass(frozen=True)
class CmpInstance:
    graph: MetricGraph
    depots: tuple[int, ...]
    terminals: tuple[int, ...]
    assigned: tuple[frozenset[int], ...]
    free: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "depots", tuple(int(v) for v in self.depots))
        object.__setattr__(self, "terminals", tuple(int(v) for v in self.terminals))
        object.__setattr__(self, "assigned", tuple(frozenset(int(v) for v in a) for a in self.assigned))
        object.__setattr__(self, "free", frozenset(int(v) for v in self.free))

    @property
    def k(self) -> int:
        return len(self.depots)

    @property
    def n(self) -> int:
        return self.graph.n

    def salesman_set(self, i: int) -> frozenset[int]:
        """S_i: depot, terminal, and private targets of salesman i."""
        return frozenset((self.depots[i], self.terminals[i])) | self.assigned[i]

    def category(self, v: int) -> tuple[str, int | None]:
        for i in range(self.k):
            if v == self.depots[i]:
                return ("depot", i)
            if v == self.terminals[i]:
                return ("terminal", i)
            if v in self.assigned[i]:
                return ("assigned", i)
        if v in self.free:
            return ("free", None)
        raise ValueError(f"vertex {v} is not in the partition")


@dataclass(frozen=True)
class RouteSet:
    routes: tuple[tuple[int, ...], ...]
    total_cost: float

    @classmethod
    def from_routes(cls, graph: MetricGraph, routes: Iterable[Sequence[int]]) -> RouteSet:
        rs = tuple(tuple(int(v) for v in r) for r in routes)
        return cls(rs, _routes_cost(graph, rs))


def _routes_cost(graph: MetricGraph, routes) -> float:
    n = graph.n
    total = 0.0
    for r in routes:
        for v in r:
            if not 0 <= v < n:
                raise IndexError(f"vertex id {v} out of range for n={n}")
        for a, b in zip(r, r[1:]):
            total += graph.w[a, b]
    return float(total)


def solution_cost(inst: CmpInstance, routes) -> float:
    """Sum of original edge weights over consecutive vertices of every route."""
    if isinstance(routes, RouteSet):
        routes = routes.routes
    return _routes_cost(inst.graph, routes)


# -- validation ----------------------------------------------------------------

def validate_graph(graph: MetricGraph) -> list[Violation]:
    w = graph.w
    n = graph.n
    out: list[Violation] = []
    if not np.all(np.isfinite(w)):
        for i, j in zip(*np.nonzero(~np.isfinite(w))):
            out.append(Violation("nonfinite", f"w[{i}][{j}] is not finite", (int(i), int(j))))
        return out
    for i, j in zip(*np.nonzero(w < 0)):
        out.append(Violation("negative", f"w[{i}][{j}] = {w[i, j]} < 0", (int(i), int(j))))
    for i in np.nonzero(np.diag(w) != 0)[0]:
        out.append(Violation("diagonal", f"w[{i}][{i}] = {w[i, i]} != 0", (int(i),)))
    for i, j in zip(*np.nonzero(np.triu(w != w.T, 1))):
        out.append(Violation("asymmetric", f"w[{i}][{j}] != w[{j}][{i}]", (int(i), int(j))))
    if out:
        return out
    for m in range(n):
        via = w[:, m][:, None] + w[m, :][None, :]
        bad = np.triu(w > via * (1.0 + TRIANGLE_RTOL), 1)
        for i, j in zip(*np.nonzero(bad)):
            out.append(Violation(
                "triangle",
                f"triangle violation ({i},{j}) via {m}: {w[i, j]} > {w[i, m]} + {w[m, j]}",
                (int(i), int(j), int(m)),
            ))
    return out


def validate_instance(inst: CmpInstance) -> list[Violation]:
    """Every violated metric or partition invariant; an empty list means valid."""
    out = validate_graph(inst.graph)
    n = inst.n
    k = inst.k
    if k < 1:
        out.append(Violation("k", "need at least one salesman"))
    if len(inst.terminals) != k:
        out.append(Violation("k", f"{k} depots but {len(inst.terminals)} terminals"))
    if len(inst.assigned) != k:
        out.append(Violation("k", f"{k} depots but {len(inst.assigned)} assigned sets"))

    owners: dict[int, list[str]] = {}
    parts = [(f"depot {i}", [d]) for i, d in enumerate(inst.depots)]
    parts += [(f"terminal {i}", [t]) for i, t in enumerate(inst.terminals)]
    parts += [(f"A{i + 1}", sorted(a)) for i, a in enumerate(inst.assigned)]
    parts.append(("F", sorted(inst.free)))
    for name, verts in parts:
        for v in verts:
            if not 0 <= v < n:
                out.append(Violation("out_of_range", f"{name} holds vertex {v} outside 0..{n - 1}", (v,)))
            owners.setdefault(v, []).append(name)
    for i, (d, t) in enumerate(zip(inst.depots, inst.terminals)):
        if d == t:
            out.append(Violation("depot_is_terminal", f"salesman {i} has d = t = {d}", (i, d)))
    for v in sorted(owners):
        if len(owners[v]) > 1:
            out.append(Violation("overlap", f"vertex {v} is in {', '.join(owners[v])}", (v,)))
    for v in range(n):
        if v not in owners:
            out.append(Violation("uncovered", f"vertex {v} belongs to no partition class", (v,)))
    return out


def verify_solution(inst: CmpInstance, routes) -> list[Violation]:
    """Feasibility check of a route set against the instance; empty means feasible."""
    claimed = None
    if isinstance(routes, RouteSet):
        claimed = routes.total_cost
        routes = routes.routes
    out: list[Violation] = []
    n = inst.n
    if len(routes) != inst.k:
        return [Violation("route_count", f"expected {inst.k} routes, got {len(routes)}")]
    seen: dict[int, int] = {}
    for i, r in enumerate(routes):
        if len(r) == 0:
            out.append(Violation("empty_route", f"route {i} is empty", (i,)))
            continue
        if r[0] != inst.depots[i]:
            out.append(Violation("endpoint", f"route {i} starts at {r[0]}, not depot {inst.depots[i]}", (i,)))
        if r[-1] != inst.terminals[i]:
            out.append(Violation("endpoint", f"route {i} ends at {r[-1]}, not terminal {inst.terminals[i]}", (i,)))
        in_route = set()
        for v in r:
            if not 0 <= v < n:
                out.append(Violation("out_of_range", f"route {i} visits unknown vertex {v}", (i, v)))
                continue
            if v in in_route:
                out.append(Violation("repeat", f"route {i} visits {v} more than once", (i, v)))
            in_route.add(v)
            if v in seen and seen[v] != i:
                code = "free_coverage" if v in inst.free else "shared_vertex"
                out.append(Violation(code, f"vertex {v} is visited by routes {seen[v]} and {i}", (v,)))
            seen.setdefault(v, i)
        for j in range(inst.k):
            if j == i:
                continue
            foreign = sorted(in_route & (inst.assigned[j] | {inst.depots[j], inst.terminals[j]}))
            for v in foreign:
                out.append(Violation("constraint", f"route {i} visits {v} reserved for salesman {j}", (i, v)))
        for v in sorted(inst.assigned[i] - in_route):
            out.append(Violation("missing_assigned", f"route {i} misses assigned vertex {v}", (i, v)))
    for v in sorted(inst.free):
        if v not in seen:
            out.append(Violation("free_coverage", f"free vertex {v} is not visited", (v,)))
    if claimed is not None and not out:
        actual = _routes_cost(inst.graph, routes)
        if not math.isclose(claimed, actual, rel_tol=COST_RTOL, abs_tol=1e-12):
            out.append(Violation("cost_mismatch", f"total_cost {claimed} != recomputed {actual}"))
    return out


# -- generation ----------------------------------------------------------------

def generate_euclidean(n: int, k: int, frac_free: float, seed: int) -> CmpInstance:
    """Uniform points in the unit square; first k depots, next k terminals.

    Of the remaining targets, the first floor(frac_free * |Q|) are free and the
    rest are dealt round-robin to A_1..A_k.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < 2 * k:
        raise ValueError(f"n={n} is too small for k={k} (need n >= 2k)")
    if not 0.0 <= frac_free <= 1.0:
        raise ValueError("frac_free must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    graph = MetricGraph.from_points(rng.random((n, 2)))
    depots = tuple(range(k))
    terminals = tuple(range(k, 2 * k))
    targets = list(range(2 * k, n))
    n_free = math.floor(frac_free * len(targets))
    free = frozenset(targets[:n_free])
    assigned = [set() for _ in range(k)]
    for idx, v in enumerate(targets[n_free:]):
        assigned[idx % k].add(v)
    return CmpInstance(graph, depots, terminals, tuple(frozenset(a) for a in assigned), free)


# -- JSON ------------------------------------------------------------------------

INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["kind", "k", "depots", "terminals", "assigned", "free"],
    "properties": {
        "kind": {"enum": ["points", "matrix"]},
        "points": {"type": "array", "items": {
            "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
        "weights": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "k": {"type": "integer", "minimum": 1},
        "depots": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "terminals": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "assigned": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
        "free": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "points"}}}, "then": {"required": ["points"]}},
        {"if": {"properties": {"kind": {"const": "matrix"}}}, "then": {"required": ["weights"]}},
    ],
}

SOLUTION_SCHEMA = {
    "type": "object",
    "required": ["routes", "total_cost"],
    "properties": {
        "routes": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
        "total_cost": {"type": "number"},
    },
}


def _check_schema(doc, schema, what: str):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        loc = f" at '{where}'" if where else ""
        raise InstanceFormatError(f"{what} schema error{loc}: {exc.message}") from None


def instance_to_dict(inst: CmpInstance) -> dict:
    doc: dict = {}
    if inst.graph.points is not None:
        doc["kind"] = "points"
        doc["points"] = inst.graph.points.tolist()
    else:
        doc["kind"] = "matrix"
        doc["weights"] = inst.graph.w.tolist()
    doc["k"] = inst.k
    doc["depots"] = list(inst.depots)
    doc["terminals"] = list(inst.terminals)
    doc["assigned"] = [sorted(a) for a in inst.assigned]
    doc["free"] = sorted(inst.free)
    return doc


def instance_from_dict(doc, validate: bool = True) -> CmpInstance:
    _check_schema(doc, INSTANCE_SCHEMA, "instance")
    if doc["kind"] == "points":
        graph = MetricGraph.from_points(doc["points"])
    else:
        try:
            graph = MetricGraph(doc["weights"])
        except ValueError as exc:
            raise InstanceFormatError(f"instance schema error at 'weights': {exc}") from None
    if len(doc["depots"]) != doc["k"]:
        raise InstanceFormatError(f"instance schema error at 'depots': expected k={doc['k']} entries")
    inst = CmpInstance(graph, tuple(doc["depots"]), tuple(doc["terminals"]),
                       tuple(frozenset(a) for a in doc["assigned"]), frozenset(doc["free"]))
    if validate:
        violations = validate_instance(inst)
        if violations:
            raise InvalidInstanceError(violations)
    return inst


def instance_digest(inst: CmpInstance) -> str:
    text = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: malformed JSON ({exc})") from None


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def save_instance(inst: CmpInstance, path) -> None:
    _write_json(path, instance_to_dict(inst))


def load_instance(path, validate: bool = True) -> CmpInstance:
    return instance_from_dict(_read_json(path), validate=validate)


def save_solution(routes: RouteSet, path) -> None:
    _write_json(path, {"routes": [list(r) for r in routes.routes], "total_cost": routes.total_cost})


def load_solution(path) -> RouteSet:
    doc = _read_json(path)
    _check_schema(doc, SOLUTION_SCHEMA, "solution")
    return RouteSet(tuple(tuple(r) for r in doc["routes"]), float(doc["total_cost"]))
