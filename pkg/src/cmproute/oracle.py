"""Exact exponential-time solvers for desk-scale instances.

Two independent routes to every optimum: plain enumeration (the reference)
and Held-Karp style dynamic programming over subsets (the cross-check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product
from typing import Callable

from .instance import CmpInstance, MetricGraph, RouteSet

WeightFn = Callable[[int, int], float]


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_vertices: int = 9
    max_states: int = 10_000_000

    def check(self, n_vertices: int, states: int) -> None:
        if n_vertices > self.max_vertices:
            raise BudgetExceeded(f"{n_vertices} vertices exceeds the oracle budget of {self.max_vertices}")
        if states > self.max_states:
            raise BudgetExceeded(f"~{states} enumeration states exceeds the budget of {self.max_states}")


DEFAULT_BUDGET = OracleBudget()


@dataclass(frozen=True)
class OracleResult:
    routes: tuple[tuple[int, ...], ...]
    opt: float


# -- single path / cycle ----------------------------------------------------------

def _best_path_enum(middle, weight: WeightFn, start: int, end: int) -> tuple[float, tuple[int, ...]]:
    best = (math.inf, ())
    for perm in permutations(sorted(middle)):
        seq = (start, *perm, end)
        c = sum(weight(a, b) for a, b in zip(seq, seq[1:]))
        if c < best[0]:
            best = (c, seq)
    return best


def _best_cycle_enum(cities, weight: WeightFn, depot: int) -> tuple[float, tuple[int, ...]]:
    if not cities:
        return 0.0, (depot,)
    return _best_path_enum(cities, weight, depot, depot)


def exact_hamiltonian_path(vertices, weight: WeightFn, start: int, end: int,
                           budget: OracleBudget = DEFAULT_BUDGET) -> float:
    """Cheapest simple start -> end path through all of ``vertices``."""
    vs = set(vertices)
    if start not in vs or end not in vs:
        raise ValueError("start and end must belong to the vertex set")
    middle = vs - {start, end}
    budget.check(len(vs), math.factorial(len(middle)))
    if start == end:
        raise ValueError("start and end must differ")
    return _best_path_enum(middle, weight, start, end)[0]


def _held_karp_table(start: int, items: list[int], weight: WeightFn):
    """dp[mask][j]: cheapest path from start covering items in mask, ending at items[j]."""
    m = len(items)
    dp = [[math.inf] * m for _ in range(1 << m)]
    for j, v in enumerate(items):
        dp[1 << j][j] = weight(start, v)
    for mask in range(1, 1 << m):
        row = dp[mask]
        for j in range(m):
            c = row[j]
            if c == math.inf or not mask >> j & 1:
                continue
            vj = items[j]
            for nxt in range(m):
                if mask >> nxt & 1:
                    continue
                nm = mask | 1 << nxt
                cand = c + weight(vj, items[nxt])
                if cand < dp[nm][nxt]:
                    dp[nm][nxt] = cand
    return dp


def _close(dp, items, mask: int, start: int, end: int, weight: WeightFn) -> float:
    if mask == 0:
        return 0.0 if start == end else weight(start, end)
    return min(dp[mask][j] + weight(items[j], end) for j in range(len(items)) if mask >> j & 1)


def hamiltonian_path_dp(vertices, weight: WeightFn, start: int, end: int) -> float:
    items = sorted(set(vertices) - {start, end})
    dp = _held_karp_table(start, items, weight)
    return _close(dp, items, (1 << len(items)) - 1, start, end, weight)


# -- CMP ---------------------------------------------------------------------------

def _cmp_states(inst: CmpInstance) -> int:
    nf = len(inst.free)
    widest = max(len(a) for a in inst.assigned) + nf
    return inst.k ** nf * math.factorial(widest)


def exact_cmp(inst: CmpInstance, budget: OracleBudget = DEFAULT_BUDGET) -> OracleResult:
    """Optimal CMP routes by enumerating free-vertex assignments and orders."""
    budget.check(inst.n, _cmp_states(inst))
    w = inst.graph.weight
    free = sorted(inst.free)
    cache: dict[tuple[int, tuple[int, ...]], tuple[float, tuple[int, ...]]] = {}

    def best(i: int, extra: tuple[int, ...]):
        key = (i, extra)
        if key not in cache:
            cache[key] = _best_path_enum(set(inst.assigned[i]) | set(extra), w,
                                         inst.depots[i], inst.terminals[i])
        return cache[key]

    opt = (math.inf, None)
    for owner in product(range(inst.k), repeat=len(free)):
        groups = [tuple(v for v, o in zip(free, owner) if o == i) for i in range(inst.k)]
        parts = [best(i, groups[i]) for i in range(inst.k)]
        total = sum(c for c, _ in parts)
        if total < opt[0]:
            opt = (total, tuple(p for _, p in parts))
    return OracleResult(opt[1], float(opt[0]))


def _partition_dp(k: int, nf: int, cost_of) -> float:
    """min over ordered partitions of the free mask into k parts of sum cost_of(i, part)."""
    full = (1 << nf) - 1
    g = [cost_of(0, mask) for mask in range(full + 1)]
    for i in range(1, k):
        ng = [math.inf] * (full + 1)
        for mask in range(full + 1):
            sub = mask
            while True:
                cand = g[mask ^ sub] + cost_of(i, sub)
                if cand < ng[mask]:
                    ng[mask] = cand
                if sub == 0:
                    break
                sub = (sub - 1) & mask
        g = ng
    return g[full]


def exact_cmp_dp(inst: CmpInstance) -> float:
    """OPT of a CMP instance by subset dynamic programming."""
    w = inst.graph.weight
    free = sorted(inst.free)
    nf = len(free)
    tables = []
    for i in range(inst.k):
        items = free + sorted(inst.assigned[i])
        dp = _held_karp_table(inst.depots[i], items, w)
        a_mask = ((1 << len(items)) - 1) ^ ((1 << nf) - 1)
        tables.append([_close(dp, items, a_mask | fm, inst.depots[i], inst.terminals[i], w)
                       for fm in range(1 << nf)])
    return float(_partition_dp(inst.k, nf, lambda i, fm: tables[i][fm]))


# -- k-TSP -------------------------------------------------------------------------

def exact_ktsp(graph: MetricGraph, depots, budget: OracleBudget = DEFAULT_BUDGET) -> OracleResult:
    """Optimal closed tours, one per depot, covering every city exactly once."""
    depots = list(depots)
    cities = sorted(set(range(graph.n)) - set(depots))
    budget.check(graph.n, len(depots) ** len(cities) * math.factorial(len(cities)))
    w = graph.weight
    cache: dict[tuple[int, tuple[int, ...]], tuple[float, tuple[int, ...]]] = {}
    opt = (math.inf, None)
    for owner in product(range(len(depots)), repeat=len(cities)):
        parts = []
        for i, d in enumerate(depots):
            group = tuple(v for v, o in zip(cities, owner) if o == i)
            if (i, group) not in cache:
                cache[(i, group)] = _best_cycle_enum(group, w, d)
            parts.append(cache[(i, group)])
        total = sum(c for c, _ in parts)
        if total < opt[0]:
            opt = (total, tuple(p for _, p in parts))
    return OracleResult(opt[1], float(opt[0]))


def exact_ktsp_dp(graph: MetricGraph, depots) -> float:
    depots = list(depots)
    cities = sorted(set(range(graph.n)) - set(depots))
    nc = len(cities)
    w = graph.weight
    tables = []
    for d in depots:
        dp = _held_karp_table(d, cities, w)
        tables.append([_close(dp, cities, m, d, d, w) for m in range(1 << nc)])
    return float(_partition_dp(len(depots), nc, lambda i, m: tables[i][m]))


def routes_from_oracle(inst: CmpInstance, res: OracleResult) -> RouteSet:
    return RouteSet.from_routes(inst.graph, res.routes)
