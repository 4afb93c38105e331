"""Approximate multi-salesman path planning (CMP) with centralized and
simulated distributed solvers, exact oracles and a test harness."""

from .instance import (
    CmpInstance,
    InstanceFormatError,
    InvalidInstanceError,
    MetricGraph,
    RouteSet,
    Violation,
    generate_euclidean,
    load_instance,
    save_instance,
    validate_instance,
    verify_solution,
)
from .solver import solve_cmp, solve_ktsp

__all__ = [
    "CmpInstance",
    "InstanceFormatError",
    "InvalidInstanceError",
    "MetricGraph",
    "RouteSet",
    "Violation",
    "generate_euclidean",
    "load_instance",
    "save_instance",
    "validate_instance",
    "verify_solution",
    "solve_cmp",
    "solve_ktsp",
]
__version__ = "0.1.0"
