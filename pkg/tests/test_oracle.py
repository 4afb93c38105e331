import math

import numpy as np
import pytest

from cmproute.instance import CmpInstance, MetricGraph, generate_euclidean, verify_solution
from cmproute.oracle import (
    BudgetExceeded,
    OracleBudget,
    exact_cmp,
    exact_cmp_dp,
    exact_hamiltonian_path,
    exact_ktsp,
    exact_ktsp_dp,
    hamiltonian_path_dp,
    routes_from_oracle,
)
from cmproute.solver import solve_cmp

from conftest import random_metric


def test_no_targets_opt_is_sum_of_dt():
    inst = generate_euclidean(6, 3, 0.5, 2)
    expect = sum(inst.graph.weight(d, t) for d, t in zip(inst.depots, inst.terminals))
    assert exact_cmp(inst).opt == pytest.approx(expect, rel=1e-12)


def test_collinear_forced_order():
    g = MetricGraph.from_points([[0, 0], [1, 0], [2, 0]])
    inst = CmpInstance(g, (0,), (2,), (frozenset({1}),), frozenset())
    res = exact_cmp(inst)
    assert res.opt == pytest.approx(2.0)
    assert res.routes == ((0, 1, 2),)


def test_hamiltonian_small_cases():
    g = random_metric(3, 1)
    assert exact_hamiltonian_path({0, 2}, g.weight, 0, 2) == g.weight(0, 2)
    assert exact_hamiltonian_path({0, 1, 2}, g.weight, 0, 2) == pytest.approx(g.weight(0, 1) + g.weight(1, 2))


@pytest.mark.parametrize("seed", range(5))
def test_hamiltonian_enum_matches_dp_eight_vertices(seed):
    g = random_metric(8, seed)
    vs = range(8)
    assert exact_hamiltonian_path(vs, g.weight, 0, 7) == pytest.approx(hamiltonian_path_dp(vs, g.weight, 0, 7), rel=1e-12)


def test_ktsp_triangle_and_all_depots():
    g = MetricGraph.from_points([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    assert exact_ktsp(g, [0]).opt == pytest.approx(3.0)
    g5 = random_metric(5, 0)
    assert exact_ktsp(g5, range(5)).opt == 0


@pytest.mark.parametrize("seed", range(10))
def test_ktsp_enum_matches_dp_seven(seed):
    g = random_metric(7, seed)
    assert exact_ktsp(g, [0, 1]).opt == pytest.approx(exact_ktsp_dp(g, [0, 1]), rel=1e-12)


def test_cmp_k1_no_free_is_hamiltonian_path():
    inst = generate_euclidean(7, 1, 0.0, 3)
    h = exact_hamiltonian_path(inst.salesman_set(0), inst.graph.weight, 0, 1)
    assert exact_cmp(inst).opt == pytest.approx(h, rel=1e-12)


@pytest.mark.parametrize("seed", range(40))
def test_oracle_routes_are_feasible_and_lower_bound(seed):
    inst = generate_euclidean(6 + seed % 3, 1 + seed % 3, (seed % 5) / 4, seed)
    res = exact_cmp(inst)
    rs = routes_from_oracle(inst, res)
    assert verify_solution(inst, rs) == []
    assert rs.total_cost == pytest.approx(res.opt, rel=1e-12)
    approx, _ = solve_cmp(inst)
    assert approx.total_cost >= res.opt * (1 - 1e-9)


def test_budget_enforced_before_work():
    inst = generate_euclidean(10, 1, 0.5, 0)
    with pytest.raises(BudgetExceeded):
        exact_cmp(inst)
    with pytest.raises(BudgetExceeded):
        exact_cmp(generate_euclidean(9, 1, 1.0, 0), OracleBudget(max_states=100))
    with pytest.raises(BudgetExceeded):
        exact_ktsp(random_metric(12, 0), [0])


def test_dp_on_hand_matrix():
    w = np.array([[0, 3, 4, 2], [3, 0, 5, 1], [4, 5, 0, 5], [2, 1, 5, 0]], dtype=float)
    g = MetricGraph(w)
    inst = CmpInstance(g, (0,), (2,), (frozenset(),), frozenset({1, 3}))
    # only orders: 0-1-3-2 (3+1+5) and 0-3-1-2 (2+1+5)
    assert exact_cmp(inst).opt == 8
    assert exact_cmp_dp(inst) == 8
