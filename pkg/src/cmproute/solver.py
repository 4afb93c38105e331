"""Centralized three-phase CMP solver and its k-TSP specialization."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations

from .instance import (
    COST_RTOL,
    CmpInstance,
    InvalidInstanceError,
    MetricGraph,
    RouteSet,
    Violation,
    validate_graph,
    validate_instance,
)
from .primitives import (
    LabeledPath,
    SpanningForest,
    TreeEdge,
    double_edges,
    euler_path,
    euler_tour,
    mst,
    path_cost,
    shortcut_path,
    tree_cost,
)


@dataclass(frozen=True)
class Phase1Result:
    path: LabeledPath
    mst: tuple[TreeEdge, ...]
    mst_cost: float  # under the d-t zero overlay
    path_cost: float  # original weights
    dt_weight: float


@dataclass(frozen=True)
class Phase2Result:
    mst: tuple[TreeEdge, ...]
    forest: SpanningForest
    cycles: tuple[LabeledPath | None, ...]
    tree_costs: tuple[float, ...]
    cycle_costs: tuple[float, ...]


@dataclass(frozen=True)
class PhaseArtifacts:
    phase1: tuple[Phase1Result, ...]
    phase2: Phase2Result
    route_costs: tuple[float, ...]


def phase1(inst: CmpInstance) -> list[Phase1Result]:
    """Per salesman, a d_i -> t_i Hamiltonian path over S_i from a doubled MST."""
    g = inst.graph
    out = []
    for i in range(inst.k):
        d, t = inst.depots[i], inst.terminals[i]
        tree = mst(inst.salesman_set(i), g.weight, forced_zero=[(d, t)], n=g.n)
        multi = double_edges(tree, drop_one_copy_of=(d, t), offset=g.edge_count)
        p = shortcut_path(euler_path(multi, d, t), protect_terminal=True)
        out.append(Phase1Result(p, tuple(tree), tree_cost(tree), path_cost(p, g.weight), g.weight(d, t)))
    return out


def depot_forest(graph: MetricGraph, depots, free) -> Phase2Result:
    """MST over D ∪ F with depot pairs forced to zero, split into one tree per depot,
    each turned into a Hamiltonian cycle by double-tour-shortcut."""
    depots = list(depots)
    dset = set(depots)
    tree = mst(dset | set(free), graph.weight, forced_zero=combinations(depots, 2), n=graph.n)
    zero = [e for e in tree if e.u in dset and e.v in dset]
    if len(zero) != len(depots) - 1:
        raise RuntimeError(f"expected {len(depots) - 1} depot-depot MST edges, found {len(zero)}")
    rest = [e for e in tree if not (e.u in dset and e.v in dset)]
    nbrs = defaultdict(list)
    for e in rest:
        nbrs[e.u].append(e)
        nbrs[e.v].append(e)

    trees, vsets, cycles, tcosts, ccosts = [], [], [], [], []
    for d in depots:
        seen = {d}
        stack = [d]
        edges = []
        while stack:
            x = stack.pop()
            for e in nbrs[x]:
                y = e.v if e.u == x else e.u
                if y not in seen:
                    seen.add(y)
                    edges.append(e)
                    stack.append(y)
        if len(seen & dset) != 1:
            raise RuntimeError(f"tree of depot {d} holds {len(seen & dset)} depots")
        edges.sort(key=lambda e: e.eid)
        trees.append(tuple(edges))
        vsets.append(frozenset(seen))
        tcosts.append(tree_cost(edges, graph.weight))
        if edges:
            c = shortcut_path(euler_tour(double_edges(edges, offset=graph.edge_count), d))
            cycles.append(c)
            ccosts.append(path_cost(c, graph.weight))
        else:
            cycles.append(None)
            ccosts.append(0.0)
    return Phase2Result(tuple(tree), SpanningForest(tuple(trees), tuple(vsets)),
                        tuple(cycles), tuple(tcosts), tuple(ccosts))


def phase2(inst: CmpInstance) -> Phase2Result:
    return depot_forest(inst.graph, inst.depots, inst.free)


def merge_cycle_and_path(cycle: LabeledPath | None, path: LabeledPath) -> list[int]:
    """Walk the cycle from the depot, then the path, skipping the repeated depot."""
    pv = path.vertices()
    if cycle is None:
        return pv
    cv = cycle.vertices()
    if cv[0] != pv[0] or cv[-1] != pv[0]:
        raise ValueError("cycle and path do not meet at the depot")
    return cv[:-1] + pv[1:]


def phase3(inst: CmpInstance, p1: list[Phase1Result], p2: Phase2Result) -> RouteSet:
    routes = [merge_cycle_and_path(p2.cycles[i], p1[i].path) for i in range(inst.k)]
    return RouteSet.from_routes(inst.graph, routes)


def solve_cmp(inst: CmpInstance) -> tuple[RouteSet, PhaseArtifacts]:
    violations = validate_instance(inst)
    if violations:
        raise InvalidInstanceError(violations)
    p1 = phase1(inst)
    p2 = phase2(inst)
    routes = phase3(inst, p1, p2)
    g = inst.graph
    rcosts = tuple(sum(g.weight(a, b) for a, b in zip(r, r[1:])) for r in routes.routes)
    return routes, PhaseArtifacts(tuple(p1), p2, rcosts)


@dataclass(frozen=True)
class KTspResult:
    tours: tuple[tuple[int, ...], ...]
    total_cost: float
    phase2: Phase2Result


def tour_vertices(cycle: LabeledPath | None, depot: int) -> tuple[int, ...]:
    return (depot,) if cycle is None else tuple(cycle.vertices())


def solve_ktsp(graph: MetricGraph, depots) -> KTspResult:
    """k-TSP as CMP with d_i = t_i and no private targets: phase II alone.

    Each tour is closed (starts and ends at its depot); a depot whose tree is a
    single vertex gets the trivial tour ``(d,)``.
    """
    depots = [int(d) for d in depots]
    if not depots:
        raise ValueError("need at least one depot")
    if len(set(depots)) != len(depots):
        raise ValueError("depots must be distinct")
    if any(not 0 <= d < graph.n for d in depots):
        raise ValueError("depot id out of range")
    violations = validate_graph(graph)
    if violations:
        raise InvalidInstanceError(violations)
    free = set(range(graph.n)) - set(depots)
    p2 = depot_forest(graph, depots, free)
    tours = tuple(tour_vertices(c, d) for c, d in zip(p2.cycles, depots))
    cost = sum(graph.weight(a, b) for t in tours for a, b in zip(t, t[1:]))
    return KTspResult(tours, float(cost), p2)


def verify_tours(graph: MetricGraph, depots, tours) -> list[Violation]:
    """Feasibility of a k-TSP answer: closed tours, every city exactly once."""
    out = []
    if len(tours) != len(depots):
        return [Violation("route_count", f"expected {len(depots)} tours, got {len(tours)}")]
    seen: dict[int, int] = {}
    for i, (d, t) in enumerate(zip(depots, tours)):
        if not t or t[0] != d or t[-1] != d:
            out.append(Violation("endpoint", f"tour {i} does not start and end at depot {d}", (i,)))
            continue
        body = t[:-1] if len(t) > 1 else t
        for v in body:
            if v in seen:
                out.append(Violation("repeat", f"city {v} visited by tours {seen[v]} and {i}", (v,)))
            seen[v] = i
    for v in range(graph.n):
        if v not in seen:
            out.append(Violation("uncovered", f"city {v} is not visited", (v,)))
    return out


def bound_violations(inst: CmpInstance, routes: RouteSet, art: PhaseArtifacts) -> list[str]:
    """Deterministic per-phase cost bounds that must hold on every run."""
    tol = 1 + COST_RTOL
    out = []
    for i, r in enumerate(art.phase1):
        lim = 2 * r.mst_cost + r.dt_weight
        if r.path_cost > lim * tol + 1e-12:
            out.append(f"salesman {i}: c(P)={r.path_cost} > 2*c(MST)+w(d,t)={lim}")
    p2 = art.phase2
    if sum(p2.cycle_costs) > 2 * sum(p2.tree_costs) * tol + 1e-12:
        out.append(f"sum c(C)={sum(p2.cycle_costs)} > 2*sum c(T)={2 * sum(p2.tree_costs)}")
    for i, rc in enumerate(art.route_costs):
        lim = art.phase1[i].path_cost + p2.cycle_costs[i]
        if rc > lim * tol + 1e-12:
            out.append(f"salesman {i}: c(H)={rc} > c(P)+c(C)={lim}")
    return out
