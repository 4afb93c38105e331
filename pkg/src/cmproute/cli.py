"""Command-line harness: ``gen``, ``solve``, ``oracle``, ``verify``, ``ratio``, ``bench``.

Exit codes: 0 ok, 1 infeasible output or bound violation, 2 usage or bad
input, 3 oracle budget or simulator event ceiling exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .instance import (
    COST_RTOL,
    CmpInstance,
    InstanceFormatError,
    InvalidInstanceError,
    RouteSet,
    generate_euclidean,
    instance_digest,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
    solution_cost,
    verify_solution,
)
from .oracle import BudgetExceeded, OracleBudget, exact_cmp, exact_ktsp
from .simnet import DEFAULT_MAX_EVENTS, SCHEDULE_KINDS, EventCeilingExceeded, ScheduleModel
from .solver import bound_violations, solve_cmp, solve_ktsp, verify_tours

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
BOUNDS = {"cmp": 4.0, "ktsp": 2.0}


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    digest: str
    problem: str
    mode: str
    cost: float
    route_costs: list[float]
    opt: float | None = None
    ratio: float | None = None
    phases: dict | None = None
    metrics: dict | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {k: v for k, v in asdict(self).items() if v is not None and v != {}}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _route_costs(inst: CmpInstance, routes) -> list[float]:
    w = inst.graph.weight
    return [float(sum(w(a, b) for a, b in zip(r, r[1:]))) for r in routes]


def _violations(problem: str, inst: CmpInstance, routes) -> list:
    if problem == "cmp":
        return verify_solution(inst, routes)
    return verify_tours(inst.graph, inst.depots, routes)


def _print_violations(violations, stream=sys.stderr) -> None:
    for v in violations:
        print(f"  [{v.code}] {v.message}", file=stream)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- solve pipeline --------------------------------------------------------------

def run_solver(inst: CmpInstance, problem: str, mode: str, schedule: ScheduleModel,
               max_events: int = DEFAULT_MAX_EVENTS):
    """Return (routes, phases-dict or None, metrics-dict or None)."""
    if mode == "centralized":
        if problem == "cmp":
            routes, art = solve_cmp(inst)
            phases = {
                "path_costs": [r.path_cost for r in art.phase1],
                "path_mst_costs": [r.mst_cost for r in art.phase1],
                "tree_costs": list(art.phase2.tree_costs),
                "cycle_costs": list(art.phase2.cycle_costs),
            }
            bad = bound_violations(inst, routes, art)
            if bad:
                phases["bound_violations"] = bad
            return routes.routes, phases, None
        res = solve_ktsp(inst.graph, inst.depots)
        phases = {"tree_costs": list(res.phase2.tree_costs), "cycle_costs": list(res.phase2.cycle_costs)}
        return res.tours, phases, None
    from .dist import dist_cmp, dist_ktsp

    if problem == "cmp":
        res = dist_cmp(inst, schedule, max_events)
    else:
        res = dist_ktsp(inst.graph, inst.depots, schedule, max_events)
    return res.routes.routes, None, res.metrics.to_json()


def cmd_gen(args) -> int:
    inst = generate_euclidean(args.n, args.k, args.frac_free, args.seed)
    save_instance(inst, args.out)
    print(instance_digest(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    sched = ScheduleModel(args.schedule, args.seed)
    t0 = time.perf_counter()
    routes, phases, metrics = run_solver(inst, args.problem, args.mode, sched, args.max_events)
    wall = time.perf_counter() - t0
    violations = _violations(args.problem, inst, routes)
    if violations:
        print("solver produced an infeasible solution:", file=sys.stderr)
        _print_violations(violations)
        return EXIT_FAIL
    rs = RouteSet.from_routes(inst.graph, routes)
    cost = solution_cost(inst, rs.routes) if args.problem == "cmp" else rs.total_cost
    if args.out:
        save_solution(rs, args.out)
    report = RunReport(instance_digest(inst), args.problem, args.mode, float(cost),
                       _route_costs(inst, rs.routes), phases=phases, metrics=metrics)
    if args.mode == "distributed":
        report.extra["schedule"] = {"kind": args.schedule, "seed": args.seed}
    if args.wall_time:
        report.extra["wall_time_s"] = wall
    _emit(report.to_json(), args.report)
    if phases and phases.get("bound_violations"):
        print("per-phase bound violated:", *phases["bound_violations"], sep="\n  ", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _oracle(inst: CmpInstance, problem: str, budget: OracleBudget):
    if problem == "cmp":
        return exact_cmp(inst, budget)
    return exact_ktsp(inst.graph, inst.depots, budget)


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    res = _oracle(inst, args.problem, OracleBudget(max_vertices=args.max_vertices))
    doc = {"digest": instance_digest(inst), "problem": args.problem, "opt": res.opt,
           "routes": [list(r) for r in res.routes]}
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    sol = load_solution(args.solution)
    violations = _violations(args.problem, inst, sol.routes)
    if not violations:
        rs = RouteSet.from_routes(inst.graph, sol.routes)
        if not math.isclose(rs.total_cost, sol.total_cost, rel_tol=COST_RTOL, abs_tol=1e-12):
            from .instance import Violation
            violations = [Violation("cost_mismatch",
                                    f"stated cost {sol.total_cost} != recomputed {rs.total_cost}")]
    if violations:
        print(f"FAIL: {len(violations)} violation(s)")
        _print_violations(violations, sys.stdout)
        return EXIT_FAIL
    print(f"OK cost={RouteSet.from_routes(inst.graph, sol.routes).total_cost!r}")
    return EXIT_OK


# -- batch commands --------------------------------------------------------------

FRAC_CYCLE = (0.0, 0.25, 0.5, 0.75, 1.0)


def ratio_rows(problem: str, count: int, n: int, k: int, seed: int, frac_free: float | None,
               budget: OracleBudget):
    """Yield (seed, frac_free, cost, opt, ratio, bound-violation strings) per instance."""
    for idx in range(count):
        s = seed + idx
        ff = FRAC_CYCLE[idx % len(FRAC_CYCLE)] if frac_free is None else frac_free
        inst = generate_euclidean(n, k, ff, s)
        routes, phases, _ = run_solver(inst, problem, "centralized", ScheduleModel())
        bad = list((phases or {}).get("bound_violations", []))
        violations = _violations(problem, inst, routes)
        if violations:
            bad += [f"infeasible: {v.message}" for v in violations]
        cost = RouteSet.from_routes(inst.graph, routes).total_cost
        opt = _oracle(inst, problem, budget).opt
        ratio = cost / opt if opt > 0 else (1.0 if cost == 0 else math.inf)
        yield s, ff, cost, opt, ratio, bad


def cmd_ratio(args) -> int:
    bound = BOUNDS[args.problem]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "frac_free", "cost", "opt", "ratio"])
    worst = 0.0
    failures = []
    budget = OracleBudget(max_vertices=args.max_vertices)
    for s, ff, cost, opt, ratio, bad in ratio_rows(args.problem, args.count, args.n, args.k, args.seed,
                                                   args.frac_free, budget):
        w.writerow([s, ff, repr(cost), repr(opt), f"{ratio:.6f}"])
        worst = max(worst, ratio)
        if cost > bound * opt * (1 + COST_RTOL):
            failures.append(f"seed {s}: ratio {ratio} exceeds {bound}")
        failures += [f"seed {s}: {b}" for b in bad]
    _emit(buf.getvalue(), args.out)
    print(f"max_ratio={worst:.6f} bound={bound} instances={args.count}", file=sys.stderr)
    if failures:
        print("\n".join(failures), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed size list {text!r}; expected e.g. 10,20,40") from None
    if not sizes or any(s < 2 for s in sizes):
        raise argparse.ArgumentTypeError("sizes must be integers >= 2")
    return sizes


def bench_rows(sizes, trials: int, seed: int, k: int, frac_free: float, schedule: str, vary: str,
               max_events: int = DEFAULT_MAX_EVENTS):
    from .dist import dist_cmp

    for n in sizes:
        for t in range(trials):
            inst_seed = seed + t if vary == "instance" else seed
            sched_seed = seed + t if vary == "schedule" else seed
            inst = generate_euclidean(n, k, frac_free, inst_seed)
            res = dist_cmp(inst, ScheduleModel(schedule, sched_seed), max_events)
            violations = verify_solution(inst, res.routes.routes)
            if violations:
                raise RuntimeError(f"n={n} seed={inst_seed}: infeasible distributed output")
            m = res.metrics
            yield {
                "n": n,
                "trial": t,
                "instance_seed": inst_seed,
                "schedule_seed": sched_seed,
                "messages": m.messages_sent,
                "messages_per_n2": m.messages_sent / n ** 2,
                "quiescence_time": m.quiescence_time,
                "time_per_nlogn": m.quiescence_time / (n * math.log2(n)),
            }


BENCH_FIELDS = ["n", "trial", "instance_seed", "schedule_seed", "messages", "messages_per_n2",
                "quiescence_time", "time_per_nlogn"]


def cmd_bench(args) -> int:
    buf = io.StringIO()
    w = csv.DictWriter(buf, BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in bench_rows(args.sizes, args.trials, args.seed, args.k, args.frac_free, args.schedule,
                          args.vary, args.max_events):
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _frac(text: str) -> float:
    x = float(text)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError("fraction must lie in [0, 1]")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmproute", description="CMP routing: solvers, oracles and simulators.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded Euclidean instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--frac-free", type=_frac, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    def problem(sp):
        sp.add_argument("--problem", choices=sorted(BOUNDS), default="cmp")

    s = sub.add_parser("solve", help="run the centralized or distributed solver")
    s.add_argument("--instance", required=True)
    s.add_argument("--mode", choices=["centralized", "distributed"], default="centralized")
    s.add_argument("--schedule", choices=SCHEDULE_KINDS, default="unit")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="solution JSON path")
    s.add_argument("--report", help="report JSON path (stdout if omitted)")
    s.add_argument("--wall-time", action="store_true", help="include wall-clock time in the report")
    s.add_argument("--max-events", type=int, default=DEFAULT_MAX_EVENTS)
    problem(s)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="exact optimum by enumeration")
    o.add_argument("--instance", required=True)
    o.add_argument("--out")
    o.add_argument("--max-vertices", type=int, default=OracleBudget().max_vertices)
    problem(o)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="check a solution file against an instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    problem(v)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("ratio", help="batch approximation-ratio check against the oracle")
    r.add_argument("--count", type=int, default=200)
    r.add_argument("--n", type=int, default=8)
    r.add_argument("--k", type=int, default=2)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--frac-free", type=_frac, default=None, help="fixed fraction (default: cycle 0..1)")
    r.add_argument("--max-vertices", type=int, default=OracleBudget().max_vertices)
    r.add_argument("--out", help="CSV path (stdout if omitted)")
    problem(r)
    r.set_defaults(func=cmd_ratio)

    b = sub.add_parser("bench", help="distributed message/time scaling table")
    b.add_argument("--sizes", type=parse_sizes, default=parse_sizes("10,20,40,80"))
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--k", type=int, default=3)
    b.add_argument("--frac-free", type=_frac, default=0.5)
    b.add_argument("--schedule", choices=SCHEDULE_KINDS, default="unit")
    b.add_argument("--vary", choices=["instance", "schedule"], default="instance",
                   help="what changes between trials of one size")
    b.add_argument("--max-events", type=int, default=DEFAULT_MAX_EVENTS)
    b.add_argument("--out", help="CSV path (stdout if omitted)")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, EventCeilingExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvalidInstanceError as exc:
        print(f"error: invalid instance: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InstanceFormatError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
