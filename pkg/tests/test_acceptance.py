"""Acceptance criteria, one test each; every test records a pass/fail line.

The lines are printed in the terminal summary under "acceptance criteria".
"""

import csv
import itertools
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from helpers import random_milp, record, toy_instance
from oracles import enumerate_milp, lam, layer_dep, pattern_charges, streaks
from reliefplan import compute_dep, default_instance, default_stochastic_model, empirical_check, sample_scenario_set, scale_instance
from reliefplan.evaluate import SweepConfig, get_profile, out_of_sample, sensitivity_sweep
from reliefplan.instance import with_horizon
from reliefplan.milp import SolverConfig, Status, solve, solve_bnb, solve_lp
from reliefplan.planner import build_deterministic, build_model, build_static_2ssp
from reliefplan.scenario import ScenarioSet

DESK = get_profile("desk")
REPORT_FILES = ("paths.csv", "summary.csv", "periods.csv", "roll_gaps.csv")


def test_1_deprivation_closed_form(inst):
    compute_dep([120, 100, 120], 0, inst)
    times = []
    for _ in range(50):
        t0 = time.perf_counter()
        v = compute_dep([120, 100, 120], 0, inst)
        times.append(time.perf_counter() - t0)
    closed = 100 * lam(3) + 2 * 20 * lam(1)
    elapsed = min(times)
    ok = v == pytest.approx(closed, rel=1e-12) and abs(v - 6511.82) <= 0.01 and elapsed < 1e-3
    record(1, ok, f"compute_dep([120,100,120]) = {v:.4f} (closed form {closed:.4f}), {elapsed * 1e3:.3f} ms")
    assert ok


def test_2_deprivation_oracle_equivalence(inst):
    t0 = time.perf_counter()
    worst = 0.0
    lists = [list(x) for n in range(1, 5) for x in itertools.product((0, 10, 20, 30), repeat=n)]
    rng = np.random.default_rng(2)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        vals = rng.uniform(0, 300, n)
        vals[rng.random(n) < 0.2] = 0.0
        lists.append(vals.tolist())
    for lst in lists:
        a, b = compute_dep(lst, 0, inst), layer_dep(lst, lam)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300) if b else abs(a))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5
    record(2, ok, f"{len(lists)} lists, max relative difference {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_3_linearization_exactness():
    inst = toy_instance(horizon=3)
    demand = [0.0, 120.0, 100.0, 120.0]
    D = np.array(demand)[None, None, None, :]
    scen = ScenarioSet(np.zeros((1, 4), dtype=int), D, np.full((1, 1, 4), 120.0), np.ones(1))
    pm = build_model(inst, scen)
    cfg = SolverConfig("bundled", gap_tol=1e-9)
    t0 = time.perf_counter()
    mismatches = 0
    for alpha in itertools.product((0, 1), repeat=3):
        m = pm.model.copy()
        for t, a in enumerate(alpha, start=1):
            j = int(pm.vars.alpha[0, 0, t])
            m.set_bounds(j, a, a)
        sol = solve(m, cfg)
        x = sol.values
        full = [1, *alpha]
        u = [int(round(x[pm.vars.U[0, 0, t]])) for t in range(1, 4)]
        c = m.arrays().c
        cols = list(pm.vars.alpha[0, 0, 1:]) + [j for zt in pm.vars.z.values() for j in zt.values()]
        dep = float(sum(c[j] * x[j] for j in cols))
        if u != streaks(full)[1:] or abs(dep - pattern_charges(full, demand, lam)) > 1e-9 * max(1.0, dep):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 30
    record(3, ok, f"8 patterns, {mismatches} mismatches, {elapsed:.2f} s bundled")
    assert ok


def test_4_bundled_solver_correctness():
    rng = np.random.default_rng(4)
    worst_obj, worst_res, solver_time = 0.0, 0.0, 0.0
    for _ in range(50):
        model, c, A, b, bins, bounds = random_milp(rng)
        best, _ = enumerate_milp(c, A, b, bins, bounds)
        t0 = time.perf_counter()
        sol = solve_bnb(model, gap_tol=1e-9)
        lp = solve_lp(model)
        solver_time += time.perf_counter() - t0
        assert sol.status is Status.OPTIMAL and lp.status is Status.OPTIMAL
        worst_obj = max(worst_obj, abs(sol.objective - best))
        worst_res = max(worst_res, lp.max_violation)
    ok = worst_obj <= 1e-6 and worst_res <= 1e-7 and solver_time < 60
    record(4, ok, f"50 MILPs, max |bnb - enumeration| {worst_obj:.1e}, max LP residual {worst_res:.1e}, {solver_time:.2f} s")
    assert ok


def test_5_single_scenario_collapse():
    inst = with_horizon(default_instance(), 3)
    spec, dists = default_stochastic_model()
    scen = sample_scenario_set(spec, dists, inst, 1, (42, 1))
    cfg = SolverConfig("bundled", gap_tol=1e-7)
    t0 = time.perf_counter()
    a = solve(build_static_2ssp(inst, scen).model, cfg)
    b = solve(build_deterministic(inst, scen).model, cfg)
    elapsed = time.perf_counter() - t0
    rel = abs(a.objective - b.objective) / max(abs(b.objective), 1.0)
    ok = a.status is Status.OPTIMAL and b.status is Status.OPTIMAL and rel <= 1e-6 and elapsed < 300
    record(5, ok, f"S_2SSP {a.objective:.4f} vs S_D {b.objective:.4f}, relative difference {rel:.1e}, {elapsed:.1f} s bundled")
    assert ok


def test_6_sampler_fidelity(model):
    t0 = time.perf_counter()
    rep = empirical_check(*model, 100_000, 6)
    elapsed = time.perf_counter() - t0
    ok = rep.max_transition_dev < 0.02 and rep.max_supply_dev < 0.02 and elapsed < 10
    record(6, ok, f"max transition deviation {rep.max_transition_dev:.4f}, supply {rep.max_supply_dev:.4f}, {elapsed:.2f} s")
    assert ok


# -- desk-scale experiments --------------------------------------------------


def _evaluate_desk(out_dir) -> float:
    env = dict(os.environ)
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "reliefplan", "evaluate", "--default", "--profile", "desk", "--seed", "42", "--out", str(out_dir)],
        capture_output=True, text=True, env=env,
    )
    elapsed = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr[-2000:]
    return elapsed


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    """Two independent runs of the desk evaluation (directory, wall seconds)."""
    runs = []
    for name in ("first", "second"):
        d = tmp_path_factory.mktemp(f"desk_{name}")
        runs.append((d, _evaluate_desk(d)))
    return runs


def test_7_value_of_rolling_horizon(desk_runs):
    out, elapsed = desk_runs[0]
    rows = list(csv.DictReader(open(out / "summary.csv")))
    per_rep = {}
    for r in rows:
        if r["replication"] == "all":
            continue
        per_rep.setdefault(r["replication"], {})[r["policy"]] = float(r["mean_total"])
        per_rep[r["replication"]]["improv"] = float(r["improv_p"])
    improv = [per_rep[k]["improv"] for k in sorted(per_rep)]
    lower = all(v["RH_2SSP"] < v["S_2SSP"] for v in per_rep.values())
    ok = len(improv) == DESK.replications and lower and min(improv) >= 0.05 and elapsed <= 2 * 3600
    shown = ", ".join(f"{v:.4f}" for v in improv)
    record(7, ok, f"Improv_P per replication [{shown}], {elapsed / 60:.1f} min (in-process HiGHS)")
    assert ok


def test_8_value_of_stochastic_programming(model):
    inst = scale_instance(default_instance(), weight_mult=5.0)
    t0 = time.perf_counter()
    rep = out_of_sample(
        ["S_D", "S_2SSP"], inst, *model, DESK.n_paths, DESK.n_static_scen, DESK.n_roll_scen, DESK.replications, 42, DESK.solver_config()
    )
    elapsed = time.perf_counter() - t0
    sd, ss = rep.mean("S_D"), rep.mean("S_2SSP")
    air_d, air_s = rep.air_share("S_D"), rep.air_share("S_2SSP")
    ok = sd > ss and air_d > air_s and elapsed <= 2 * 3600
    record(8, ok, f"weight 5: S_D total {sd:.0f} vs S_2SSP {ss:.0f}; air share {air_d:.3f} vs {air_s:.3f}, {elapsed / 60:.1f} min")
    assert ok


def test_9_low_weight_starvation(model):
    cfg = SweepConfig("deprivation_weight", (0.25, 0.5), replications=DESK.replications, seed=42)
    t0 = time.perf_counter()
    res = sensitivity_sweep(cfg, default_instance(), *model, DESK.n_paths, DESK.n_static_scen, DESK.n_roll_scen, DESK.solver_config(), policies=("S_2SSP",))
    elapsed = time.perf_counter() - t0
    bad = sum(1 for _, rep in res for r in rep.select("S_2SSP") if r.part("deprivation") != r.total)
    n = sum(len(rep.select("S_2SSP")) for _, rep in res)
    ok = bad == 0 and n == 2 * DESK.replications * DESK.n_paths
    record(9, ok, f"weights 0.25/0.5: Dep == Total on {n - bad}/{n} S_2SSP paths, {elapsed / 60:.1f} min")
    assert ok


def test_10_determinism(desk_runs):
    (a, ta), (b, tb) = desk_runs
    differing = [f for f in REPORT_FILES if (a / f).read_bytes() != (b / f).read_bytes()]
    ok = not differing
    record(10, ok, f"two desk runs ({ta / 60:.1f} + {tb / 60:.1f} min), differing files: {differing or 'none'}")
    assert ok
