"""Command-line front door: tours, simulation runs, verification suites,
and parameter sweeps.

Exit codes: 0 success, 1 usage error, 2 validation error (violated
assumptions or premise), 3 property-suite failure.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import metrics, scenario, verify
from .engine import AssumptionError, Simulation, random_initial_state
from .fleet import StaticallyCoverableError, compute_goal_partition, load_fleet_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_SUITE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _worker_count() -> int:
    env = os.environ.get("CYCLE_PATROL_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def cmd_tour(args) -> int:
    try:
        tasks = scenario.load_tasks_json(args.tasks)
    except FileNotFoundError:
        print(f"error: no such file: {args.tasks}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: bad task file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    build = scenario.build_tour_mst if args.method == "mst" else scenario.build_tour_nn
    graph = build(tasks)
    if graph.total_length == 0.0:
        print("warning: degenerate cycle of length 0", file=sys.stderr)
    scenario.save_graph_json(graph, args.output)
    print(f"{args.method} tour over {len(tasks.tasks)} tasks: "
          f"L = {graph.total_length:.9f} -> {args.output}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        spec = load_fleet_json(args.fleet)
    except FileNotFoundError:
        print(f"error: no such file: {args.fleet}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: bad fleet file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    cfg = spec.config
    if spec.positions is not None and not args.random_start:
        positions, orientations = spec.positions, spec.orientations
    else:
        rng = random.Random(args.seed)
        positions, orientations = random_initial_state(cfg, rng, n_minus=args.n_minus)
    sim = Simulation(cfg, positions, orientations)
    for ch in spec.changes:
        sim.schedule_parameter_change(ch["t"], ch["robot"],
                                      v=ch.get("v"), r=ch.get("r"))
    if args.events is not None:
        sim.run_until(max_events=args.events)
    elif args.until is not None:
        sim.run_until(t_end=args.until)
    else:
        verify.run_to_deep_convergence(sim, rtol=1e-9)
        sim.run_until(t_end=sim.t + 10.0 * cfg.n * sim.t_star)

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    sim.trace.write_csv(outdir / "trace.csv")
    report = metrics.theorem_verdicts(sim.trace)
    report.write_json(outdir / "report.json")
    metrics.write_plot_data(sim.trace, outdir / "plot_data.csv")
    goal = compute_goal_partition(cfg)
    print(f"t_star = {goal.t_star:.9f} s, t_rev predicted = "
          f"{report.t_rev_predicted:.9f} s, n_bal = {report.n_bal}")
    for v in report.verdicts:
        print(f"  {v.name}: {v.status}"
              + (f" (measured {v.measured:.6f}, rel err {v.rel_err:.2e})"
                 if v.measured is not None else ""))
    print(f"{len(sim.trace.events)} events -> {outdir}")
    return EXIT_OK if report.all_pass or args.events is not None or args.until is not None else EXIT_SUITE


def cmd_verify(args) -> int:
    names = list(verify.ALL_SUITES) if args.suite == "all" else [args.suite]
    overrides = {
        "consensus": {"n_fleets": args.fleets},
        "words": {"random_samples": args.samples},
        "rounds": {"instances": args.instances},
        "conservation": {"total_events": args.conservation_events},
    }
    ok = True
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        futures = {
            name: pool.submit(verify.ALL_SUITES[name],
                              **{k: v for k, v in overrides[name].items() if v})
            for name in names
        }
        for name in names:
            result = futures[name].result()
            for line in result.summary_lines():
                print(line)
            ok = ok and result.ok
    return EXIT_OK if ok else EXIT_SUITE


def _parse_range(spec: str, integral: bool) -> list[float]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        if integral:
            return [float(x) for x in range(int(lo), int(hi) + 1)]
        lo_f, hi_f = float(lo), float(hi)
        steps = 8
        return [lo_f + (hi_f - lo_f) * k / (steps - 1) for k in range(steps)]
    return [float(x) for x in spec.split(",")]


def cmd_sweep(args) -> int:
    if (args.vary_n is None) == (args.factor is None):
        print("error: pass exactly one of --vary-n or --factor", file=sys.stderr)
        return EXIT_USAGE
    measure = not args.closed_form_only
    workers = _worker_count()
    if args.vary_n is not None:
        values = [int(x) for x in _parse_range(args.vary_n, integral=True)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda n: verify.sweep_fleet_size([n], v=args.v, r=args.r, L=args.L,
                                                  seed=args.seed, measure=measure)[0],
                values))
        label = "n"
    else:
        values = _parse_range(args.factor, integral=False)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda f: verify.sweep_capability_factor([f], v=args.v, r=args.r,
                                                         L=args.L, seed=args.seed,
                                                         measure=measure)[0],
                values))
        label = "factor"
    with open(args.output, "w", newline="") as fh:
        fh.write(f"{label},n,t_star,t_rev_predicted,t_rev_measured,rel_err\n")
        for row in rows:
            fh.write(f"{row['label']:.9f},{row['n']},{row['t_star']:.9f},"
                     f"{row['t_rev_predicted']:.9f},{row['t_rev_measured']:.9f},"
                     f"{row['rel_err']:.9f}\n")
    print(f"{len(rows)} sweep points -> {args.output}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="cyclepatrol",
                     description="Cycle patrolling simulator and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tour", help="build a cycle graph from task locations")
    p.add_argument("tasks", help="tasks JSON file")
    p.add_argument("--method", choices=("mst", "nn"), default="nn")
    p.add_argument("-o", "--output", default="cyclegraph.json")
    p.set_defaults(func=cmd_tour)

    p = sub.add_parser("simulate", help="run the event-driven simulator")
    p.add_argument("fleet", help="fleet JSON file")
    p.add_argument("--until", type=float, default=None, help="simulate to this time [s]")
    p.add_argument("--events", type=int, default=None, help="simulate this many events")
    p.add_argument("--seed", type=int, default=0, help="seed for random placement")
    p.add_argument("--n-minus", type=int, default=None,
                   help="robots oriented backward for random placement")
    p.add_argument("--random-start", action="store_true",
                   help="ignore p0/o0 from the fleet file")
    p.add_argument("-o", "--output", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", choices=(*verify.ALL_SUITES, "all"), default="all")
    p.add_argument("--fleets", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--conservation-events", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="revisit-time sweeps over fleet parameters")
    p.add_argument("--vary-n", default=None, help="fleet sizes, e.g. 2..20")
    p.add_argument("--factor", default=None, help="capability factors, e.g. 0.2..15")
    p.add_argument("--v", type=float, default=2.0)
    p.add_argument("--r", type=float, default=50.0)
    p.add_argument("--L", type=float, default=10_000.0)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--closed-form-only", action="store_true")
    p.add_argument("-o", "--output", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (AssumptionError, StaticallyCoverableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: bad JSON input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
