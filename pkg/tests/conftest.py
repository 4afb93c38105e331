import random

import numpy as np
import pytest

from cmproute.instance import MetricGraph


def random_metric(n: int, seed: int) -> MetricGraph:
    """Euclidean points in the unit square: always metric."""
    rng = np.random.default_rng(seed)
    return MetricGraph.from_points(rng.random((n, 2)))


def random_walk(rng: random.Random, vertices: int, steps: int, closed: bool = False) -> list[int]:
    """Random walk without immediate repeats (consecutive equal vertices are not an edge)."""
    walk = [rng.randrange(vertices)]
    while len(walk) < steps + 1:
        v = rng.randrange(vertices)
        if v != walk[-1]:
            walk.append(v)
    if closed:
        if walk[-1] == walk[0]:
            walk.pop()
        walk.append(walk[0])
    return walk


@pytest.fixture
def tmp_json(tmp_path):
    return lambda name: tmp_path / name


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
