"""Command-line front end.

    reliefplan COMMAND [options]

Commands: gen-instance, sample-paths, plan-static, plan-rh, evaluate,
stability, sweep, roll-step.  Every command writes into ``--out`` (default
``out``).  Exit codes: 0 success, 2 usage error, 3 bad input file or value,
4 solver failure, 5 planning failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluate as ev
from .instance import InstanceError, default_instance, load_instance, scale_instance, with_horizon, write_instance
from .milp import BACKENDS, SolverConfig
from .milp.external import ENV_VAR, SolverError
from .planner.builder import POD_BOUNDS, InitialState
from .planner.execution import FirstStagePlan, PlanningError, RollState, roll_step, run_rolling_horizon, solve_static
from .scenario import (
    SamplePath,
    default_stochastic_model,
    load_stochastic_model,
    read_paths_csv,
    sample_path,
    sample_scenario_set,
    seed_key,
    write_paths_csv,
    write_stochastic_model,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_SOLVER = 4
EXIT_PLANNING = 5


class UsageError(Exception):
    pass


# -- parser --------------------------------------------------------------


def _common(p: argparse.ArgumentParser, sampling: bool = True) -> None:
    src = p.add_argument_group("inputs")
    src.add_argument("--default", action="store_true", help="use the built-in instance and stochastic model (the default when no file is given)")
    src.add_argument("--instance", type=Path, help="instance file (JSON)")
    src.add_argument("--model", type=Path, help="stochastic model file (JSON)")
    if sampling:
        src.add_argument("--seed", type=int, required=True, help="base seed for all sampling")
    solver = p.add_argument_group("solver")
    solver.add_argument("--backend", choices=BACKENDS, help="MILP backend (default: profile setting, else highs)")
    solver.add_argument("--solver-cmd", help=f"external solver command template (overrides ${ENV_VAR})")
    solver.add_argument("--gap", type=float, help="relative MIP gap tolerance")
    solver.add_argument("--time-limit", type=float, help="seconds per static solve")
    solver.add_argument("--roll-time-limit", type=float, help="seconds per rolling-horizon roll")
    solver.add_argument("--pod-bounds", choices=POD_BOUNDS, default="capacity", help="POD inventory bound (default: capacity)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")


def _counts(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--profile", choices=sorted(ev.PROFILES), default="desk", help="frozen experiment settings (default: desk)")
    g.add_argument("--paths", type=int, help="number of evaluation paths")
    g.add_argument("--static-scen", type=int, help="scenarios for static models")
    g.add_argument("--roll-scen", type=int, help="scenarios per roll")
    g.add_argument("--replications", type=int, help="number of replications")
    g.add_argument("--workers", type=int, default=1, help="worker processes for rolling policies (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reliefplan", description="Post-hurricane relief logistics planning and evaluation.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("gen-instance", help="write the instance and stochastic model files")
    _common(p, sampling=False)
    p.add_argument("--demand-mult", type=float, default=1.0, help="scale baseline demand and supply")
    p.add_argument("--weight-mult", type=float, default=1.0, help="scale the deprivation weight")
    p.add_argument("--horizon", type=int, help="number of periods after period 0")

    p = sub.add_parser("sample-paths", help="sample evaluation paths")
    _common(p)
    p.add_argument("--n", type=int, required=True, help="number of paths")

    p = sub.add_parser("plan-static", help="solve S_2SSP (or S_D) and dump the plan")
    _common(p)
    p.add_argument("--n-scen", type=int, default=20, help="number of scenarios (default: 20)")
    p.add_argument("--deterministic", action="store_true", help="solve S_D on the mean scenario")

    p = sub.add_parser("plan-rh", help="run the rolling-horizon policy along one path")
    _common(p)
    p.add_argument("--n-per-roll", type=int, default=10, help="scenarios per roll (default: 10)")
    p.add_argument("--deterministic", action="store_true", help="run RH_D instead of RH_2SSP")
    p.add_argument("--path-file", type=Path, help="paths CSV (from sample-paths); default samples one path")
    p.add_argument("--path-index", type=int, default=0, help="which path to execute (default: 0)")

    p = sub.add_parser("evaluate", help="out-of-sample evaluation of all policies")
    _common(p)
    _counts(p)
    p.add_argument("--policies", nargs="+", choices=ev.POLICIES, default=list(ev.POLICIES), help="policies to evaluate")
    p.add_argument("--resample-rolls", choices=("yes", "no"), help="new lookahead seed per replication (default: profile)")

    p = sub.add_parser("stability", help="sample-size stability test")
    _common(p)
    _counts(p)
    p.add_argument("--mode", choices=("static", "rolling"), required=True)
    p.add_argument("--sizes", type=int, nargs="+", help="sample sizes (default: 20 50 100 200 400 or 10 20 50 100)")

    p = sub.add_parser("sweep", help="sensitivity sweep over one axis")
    _common(p)
    _counts(p)
    p.add_argument("--axis", choices=ev.SWEEP_AXES, required=True)
    p.add_argument("--values", type=float, nargs="+", help="axis values (default: the standard grid)")
    p.add_argument("--policies", nargs="+", choices=ev.POLICIES, default=list(ev.POLICIES), help="policies to evaluate")

    p = sub.add_parser("roll-step", help="recommend the current period's plan from an observed state")
    _common(p)
    p.add_argument("--state", type=Path, required=True, help="observed state JSON ('-' for stdin)")
    p.add_argument("--n-per-roll", type=int, default=10, help="lookahead scenarios (default: 10)")
    p.add_argument("--deterministic", action="store_true", help="use the mean lookahead scenario")
    return ap


# -- helpers -------------------------------------------------------------


def load_inputs(args):
    if args.default and (args.instance or args.model):
        raise UsageError("--default cannot be combined with --instance or --model")
    inst = load_instance(args.instance) if args.instance else default_instance()
    spec, dists = load_stochastic_model(args.model) if args.model else default_stochastic_model()
    return inst, spec, dists


def solver_config(args, profile: ev.Profile | None = None, rolling: bool = False) -> SolverConfig:
    base = profile.solver_config() if profile else SolverConfig(backend="highs", gap_tol=0.01)
    updates = {}
    if args.backend:
        updates["backend"] = args.backend
    if args.gap is not None:
        updates["gap_tol"] = args.gap
    limit = args.roll_time_limit if rolling else args.time_limit
    if limit is not None:
        updates["time_limit"] = limit
    if args.solver_cmd:
        updates["solver_cmd"] = args.solver_cmd
    return dataclasses.replace(base, **updates)


def _positive(name: str, value: int | None) -> None:
    if value is not None and value < 1:
        raise UsageError(f"--{name} must be >= 1")


def profile_counts(args) -> tuple[ev.Profile, int, int, int, int]:
    prof = ev.get_profile(args.profile)
    for name in ("paths", "static_scen", "roll_scen", "replications", "workers"):
        _positive(name.replace("_", "-"), getattr(args, name))
    pick = lambda v, d: d if v is None else v  # noqa: E731
    return (
        prof,
        pick(args.paths, prof.n_paths),
        pick(args.static_scen, prof.n_static_scen),
        pick(args.roll_scen, prof.n_roll_scen),
        pick(args.replications, prof.replications),
    )


def write_plan_csv(plan: FirstStagePlan, inst, path: Path) -> None:
    """Nonzero first-stage values, one per row: variable, node, item, period, value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "node", "item", "period", "value"])
        for t in range(plan.horizon + 1):
            for i in range(inst.num_sas):
                w.writerow(["open", i + 1, "", t, repr(float(plan.open[i, t]))])
                if plan.opened[i, t]:
                    w.writerow(["opened", i + 1, "", t, repr(float(plan.opened[i, t]))])
            for n in range(inst.num_nodes):
                for k in range(inst.num_items):
                    if plan.inventory[n, k, t]:
                        w.writerow(["inventory", n + 1, k + 1, t, repr(float(plan.inventory[n, k, t]))])
            for s in range(inst.num_pods):
                for k in range(inst.num_items):
                    w.writerow(["satisfied", inst.num_sas + s + 1, k + 1, t, repr(float(plan.satisfied[s, k, t]))])


def write_costs_csv(costs, path: Path) -> None:
    from .planner.execution import COST_PARTS

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", *COST_PARTS, "total"])
        for t in range(costs.table.shape[1]):
            col = costs.table[:, t]
            w.writerow([t, *(repr(float(v)) for v in col), repr(float(col.sum()))])


def _sample_one_path(args, inst, spec, dists) -> tuple[SamplePath, int]:
    if args.path_file:
        paths = read_paths_csv(args.path_file, inst, spec)
        if not 0 <= args.path_index < len(paths):
            raise ValueError(f"--path-index {args.path_index} outside 0..{len(paths) - 1}")
        return paths[args.path_index], args.path_index
    return sample_path(spec, dists, inst, seed_key(args.seed, ev.STREAM_PATHS, args.path_index)), args.path_index


def read_state(path: Path, inst, spec):
    """Observed state for ``roll-step``.

    Keys: ``period``, ``state`` (name), ``open`` (L), ``inventory`` (N x K),
    ``streak`` (S x K), ``supply`` (K, current period), and ``demand_history``
    (S x K x period, realized demand of past periods, needed inside open
    streaks; may be omitted at period 0).
    """
    text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"state file: {exc}") from None
    try:
        t = int(doc["period"])
        T, S, K = inst.horizon, inst.num_pods, inst.num_items
        if not 0 <= t <= T:
            raise ValueError(f"period {t} outside 0..{T}")
        zeros = lambda *shape: np.zeros(shape)  # noqa: E731
        init = InitialState(
            t,
            np.asarray(doc.get("open", zeros(inst.num_sas)), dtype=float),
            np.asarray(doc.get("inventory", zeros(inst.num_nodes, K)), dtype=float),
            np.asarray(doc.get("streak", zeros(S, K)), dtype=int),
        )
        init.check(inst)
        states = np.full(T + 1, -1, dtype=int)
        states[t] = spec.index(doc["state"])
        demand = zeros(S, K, T + 1)
        hist = np.asarray(doc.get("demand_history", zeros(S, K, t)), dtype=float)
        if hist.shape != (S, K, t):
            raise ValueError(f"demand_history must have shape {(S, K, t)}, got {hist.shape}")
        demand[:, :, :t] = hist
        supply = zeros(K, T + 1)
        supply[:, t] = np.asarray(doc["supply"], dtype=float)
    except KeyError as exc:
        raise ValueError(f"state file: missing key {exc}") from None
    return RollState(init, int(states[t]), SamplePath(states, demand, supply, 0))


# -- commands ------------------------------------------------------------


def cmd_gen_instance(args) -> int:
    inst, spec, dists = load_inputs(args)
    inst = scale_instance(inst, args.demand_mult, args.weight_mult)
    if args.horizon is not None:
        inst = with_horizon(inst, args.horizon)
    args.out.mkdir(parents=True, exist_ok=True)
    write_instance(inst, args.out / "instance.json")
    write_stochastic_model(spec, dists, args.out / "stochastic_model.json")
    print(f"wrote {args.out / 'instance.json'} and {args.out / 'stochastic_model.json'}")
    return EXIT_OK


def cmd_sample_paths(args) -> int:
    _positive("n", args.n)
    inst, spec, dists = load_inputs(args)
    paths = ev.evaluation_paths(spec, dists, inst, args.n, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    write_paths_csv(paths, inst, spec, args.out / "paths.csv")
    print(f"wrote {len(paths)} paths to {args.out / 'paths.csv'}")
    return EXIT_OK


def cmd_plan_static(args) -> int:
    _positive("n-scen", args.n_scen)
    inst, spec, dists = load_inputs(args)
    scen = sample_scenario_set(spec, dists, inst, args.n_scen, seed_key(args.seed, ev.STREAM_STATIC, 0))
    plan, sol, _ = solve_static(inst, scen, solver_config(args), stochastic=not args.deterministic, pod_bounds=args.pod_bounds)
    args.out.mkdir(parents=True, exist_ok=True)
    write_plan_csv(plan, inst, args.out / "plan.csv")
    name = "S_D" if args.deterministic else "S_2SSP"
    print(f"{name} objective {sol.objective:.6f} gap {sol.gap or 0.0:.6f} status {sol.status.value}")
    return EXIT_OK


def cmd_plan_rh(args) -> int:
    _positive("n-per-roll", args.n_per_roll)
    inst, spec, dists = load_inputs(args)
    path, p = _sample_one_path(args, inst, spec, dists)
    decisions = []
    ex = run_rolling_horizon(
        inst, spec, dists, path, args.n_per_roll, not args.deterministic, seed_key(args.seed, ev.STREAM_ROLL, 0),
        solver_config(args, rolling=True), pod_bounds=args.pod_bounds, on_roll=decisions.append,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    write_plan_csv(ex.plan, inst, args.out / "plan.csv")
    write_costs_csv(ex.costs, args.out / "costs.csv")
    with open(args.out / "rolls.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["roll", "objective", "gap", "status"])
        for d in decisions:
            w.writerow([d.period, repr(d.objective), repr(d.gap), d.status])
    print(f"{ex.policy} path {p}: total {ex.total:.6f} logistics {ex.costs.logistics:.6f} deprivation {ex.costs.deprivation:.6f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    inst, spec, dists = load_inputs(args)
    prof, n_paths, n_static, n_roll, reps = profile_counts(args)
    inst = with_horizon(inst, prof.horizon) if inst.horizon != prof.horizon and not args.instance else inst
    resample = prof.resample_rolls if args.resample_rolls is None else args.resample_rolls == "yes"
    report = ev.out_of_sample(
        args.policies, inst, spec, dists, n_paths, n_static, n_roll, reps, args.seed,
        solver_config(args, prof), roll_config=solver_config(args, prof, rolling=True),
        resample_rolls=resample, pod_bounds=args.pod_bounds, workers=args.workers,
        progress=lambda msg: print(msg, file=sys.stderr, flush=True),
    )
    files = ev.write_report(report, args.out)
    if {"S_2SSP", "RH_2SSP"} <= set(report.policies):
        print(f"Improv_P {report.improvement():.6f}")
    print("wrote " + " ".join(str(f) for f in files))
    return EXIT_OK


def cmd_stability(args) -> int:
    inst, spec, dists = load_inputs(args)
    prof, n_paths, n_static, n_roll, reps = profile_counts(args)
    sizes = args.sizes or (ev.STATIC_SIZES if args.mode == "static" else ev.ROLLING_SIZES)
    for s in sizes:
        _positive("sizes", s)
    other = n_roll if args.mode == "static" else n_static
    rows = ev.stability_test(args.mode, sizes, inst, spec, dists, n_paths, reps, args.seed, solver_config(args, prof), other_size=other, workers=args.workers)
    print(f"wrote {ev.write_stability(args.mode, rows, args.out)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst, spec, dists = load_inputs(args)
    prof, n_paths, n_static, n_roll, reps = profile_counts(args)
    values = tuple(args.values) if args.values else ev.DEFAULT_SWEEP_VALUES[args.axis]
    cfg = ev.SweepConfig(args.axis, values, reps, args.seed)
    results = ev.sensitivity_sweep(
        cfg, inst, spec, dists, n_paths, n_static, n_roll, solver_config(args, prof), policies=args.policies,
        resample_rolls=prof.resample_rolls, workers=args.workers, progress=lambda msg: print(msg, file=sys.stderr, flush=True),
    )
    print(f"wrote {ev.write_sweep(cfg, results, args.out)}")
    return EXIT_OK


def cmd_roll_step(args) -> int:
    _positive("n-per-roll", args.n_per_roll)
    inst, spec, dists = load_inputs(args)
    state = read_state(args.state, inst, spec)
    d = roll_step(
        inst, spec, dists, state, args.n_per_roll, not args.deterministic, seed_key(args.seed, ev.STREAM_ROLL, 0),
        solver_config(args, rolling=True), pod_bounds=args.pod_bounds,
    )
    t = d.period
    print(f"period {t} objective {d.objective:.6f} gap {d.gap:.6f} status {d.status}")
    for i in range(inst.num_sas):
        print(f"SA {i + 1}: {'open' if d.plan.open[i, t] > 0.5 else 'closed'}{' (newly opened)' if d.plan.opened[i, t] > 0.5 else ''}")
    for n in range(inst.num_nodes):
        inv = " ".join(f"{v:.2f}" for v in d.plan.inventory[n, :, t])
        print(f"node {n + 1} inventory: {inv}")
    for s in range(inst.num_pods):
        sat = " ".join("yes" if v > 0.5 else "no" for v in d.plan.satisfied[s, :, t])
        print(f"POD {inst.num_sas + s + 1} satisfy: {sat}")
    args.out.mkdir(parents=True, exist_ok=True)
    write_plan_csv(d.plan, inst, args.out / "roll_plan.csv")
    return EXIT_OK


COMMANDS = {
    "gen-instance": cmd_gen_instance,
    "sample-paths": cmd_sample_paths,
    "plan-static": cmd_plan_static,
    "plan-rh": cmd_plan_rh,
    "evaluate": cmd_evaluate,
    "stability": cmd_stability,
    "sweep": cmd_sweep,
    "roll-step": cmd_roll_step,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"reliefplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"reliefplan: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PlanningError as exc:
        print(f"reliefplan: planning error: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except (InstanceError, ValueError, OSError) as exc:
        print(f"reliefplan: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
