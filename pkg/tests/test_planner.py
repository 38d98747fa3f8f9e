import itertools

import numpy as np
import pytest

from helpers import toy_instance
from oracles import lam, pattern_charges, streaks
from reliefplan import ConditionalDists, MarkovSpec, compute_dep, sample_path, sample_scenario_set, scale_instance
from reliefplan.deprivation import build_dep_table
from reliefplan.instance import with_horizon
from reliefplan.milp import SolverConfig, solve
from reliefplan.planner import (
    CostBreakdown,
    FirstStagePlan,
    InitialState,
    RollState,
    build_deterministic,
    build_model,
    build_static_2ssp,
    evaluate_first_stage_on_path,
    evaluate_plan_on_path,
    lookahead_scenarios,
    mean_scenario,
    roll_step,
    run_rolling_horizon,
    solve_plan,
    solve_static,
)
from reliefplan.scenario import SamplePath, ScenarioSet, scenario_set_from_paths

HIGHS = SolverConfig("highs", gap_tol=1e-9)
BUNDLED = SolverConfig("bundled", gap_tol=1e-9)


def one_scenario(inst, demand_profile, supply=None):
    """Scenario set with POD/item demand ``demand_profile[t]`` everywhere."""
    T = inst.horizon
    d = np.asarray(demand_profile, dtype=float)
    demand = np.broadcast_to(d, (inst.num_pods, inst.num_items, T + 1)).copy()
    demand[:, :, 0] = 0
    R = np.full((inst.num_items, T + 1), float(d.max() * inst.num_pods)) if supply is None else supply
    return ScenarioSet(np.zeros((1, T + 1), dtype=int), demand[None], R[None], np.ones(1))


def empty_plan(inst, satisfied=1.0):
    L, N, S, K, T = inst.num_sas, inst.num_nodes, inst.num_pods, inst.num_items, inst.horizon
    return FirstStagePlan(0, T, np.zeros((L, T + 1)), np.zeros((L, T + 1)), np.zeros((N, K, T + 1)), np.full((S, K, T + 1), satisfied))


# -- model structure --------------------------------------------------------


def test_binary_opening_count(inst, model):
    pm = build_static_2ssp(inst, sample_scenario_set(*model, inst, 2, 1))
    assert int((pm.vars.x >= 0).sum() + (pm.vars.y >= 0).sum()) == 24


def test_alpha_only_after_period_zero(inst, model):
    pm = build_model(inst, sample_scenario_set(*model, inst, 1, 1))
    assert np.all(pm.vars.alpha[:, :, 0] < 0)
    assert np.all(pm.vars.alpha[:, :, 1:] >= 0)


def test_no_air_capacity_rows(inst, model):
    pm = build_model(inst, sample_scenario_set(*model, inst, 2, 1))
    hcols = set(pm.vars.h[pm.vars.h >= 0].tolist())
    m = pm.model
    for i in range(m.num_constrs):
        if hcols & set(m.row(i)):
            assert m.constr_names[i].split("[")[0] in {"bal", "avail", "podair"}


def test_dummy_arcs_only_from_pods(inst, model):
    pm = build_model(inst, sample_scenario_set(*model, inst, 1, 1))
    N, L = inst.num_nodes, inst.num_sas
    dummy = pm.vars.f[0, :, N]
    assert np.all(dummy[:L] < 0)
    assert np.all(dummy[L:, :, 1:] >= 0)
    obj = pm.model.arrays().c
    assert np.all(obj[dummy[dummy >= 0]] == 0)


def test_dep_table_mismatch_rejected(inst, model):
    scen = sample_scenario_set(*model, inst, 2, 1)
    dep = build_dep_table(inst, scen.demand[:1])
    with pytest.raises(ValueError):
        build_static_2ssp(inst, scen, dep)


def test_scenario_dimension_mismatch_rejected(inst, model):
    scen = sample_scenario_set(*model, with_horizon(inst, 3), 1, 1)
    with pytest.raises(ValueError):
        build_model(inst, scen)


def test_bad_pod_bounds_rejected(inst, model):
    with pytest.raises(ValueError):
        build_model(inst, sample_scenario_set(*model, inst, 1, 1), pod_bounds="nope")


# -- mean scenario --------------------------------------------------------------


def test_mean_of_identical_paths(inst, model):
    p = sample_path(*model, inst, 3)
    m = mean_scenario(scenario_set_from_paths([p, p, p]))
    np.testing.assert_allclose(m.demand[0], p.demand)
    np.testing.assert_allclose(m.supply[0], p.supply)


def test_mean_of_d_and_3d(inst, model):
    p = sample_path(*model, inst, 3)
    q = SamplePath(p.states, 3 * p.demand, 3 * p.supply)
    np.testing.assert_allclose(mean_scenario(scenario_set_from_paths([p, q])).demand[0], 2 * p.demand)


# -- solved models ---------------------------------------------------------------


def test_zero_demand_costs_nothing(inst):
    T = inst.horizon
    scen = ScenarioSet(
        np.zeros((2, T + 1), dtype=int),
        np.zeros((2, inst.num_pods, inst.num_items, T + 1)),
        np.full((2, inst.num_items, T + 1), 100.0),
        np.full(2, 0.5),
    )
    plan, sol, _ = solve_plan(build_static_2ssp(inst, scen), HIGHS)
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert not plan.open.any()


def test_single_scenario_collapse_toy():
    inst = toy_instance(horizon=3)
    scen = one_scenario(inst, [0, 120, 100, 120], np.array([[120.0, 90.0, 60.0, 150.0]]))
    a = solve(build_static_2ssp(inst, scen).model, BUNDLED)
    b = solve(build_deterministic(inst, scen).model, BUNDLED)
    assert a.objective == pytest.approx(b.objective, rel=1e-6)


@pytest.mark.parametrize("alpha", list(itertools.product((0, 1), repeat=3)))
def test_streaks_and_charges_follow_pattern(alpha):
    inst = toy_instance(horizon=3)
    demand = [0, 120, 100, 120]
    pm = build_model(inst, one_scenario(inst, demand))
    m = pm.model.copy()
    for t, a in enumerate(alpha, start=1):
        j = int(pm.vars.alpha[0, 0, t])
        m.set_bounds(j, a, a)
    sol = solve(m, BUNDLED)
    x = sol.values
    full = [1, *alpha]
    u = [round(x[pm.vars.U[0, 0, t]]) for t in range(1, 4)]
    assert u == streaks(full)[1:]
    # deprivation terms sit on z and alpha columns only
    c = m.arrays().c
    cols = list(pm.vars.alpha[0, 0, 1:]) + [j for zt in pm.vars.z.values() for j in zt.values()]
    dep = float(sum(c[j] * x[j] for j in cols))
    assert dep == pytest.approx(pattern_charges(full, demand, lam), rel=1e-12, abs=1e-9)


def test_static_plan_invariants(inst, model):
    inst3 = with_horizon(inst, 3)
    scen = sample_scenario_set(*model, inst3, 3, 5)
    pm = build_static_2ssp(inst3, scen)
    plan, sol, _ = solve_plan(pm, SolverConfig("highs", gap_tol=1e-6))
    L = inst3.num_sas
    assert np.all(np.diff(plan.open, axis=1) >= 0)
    np.testing.assert_array_equal(plan.open, np.cumsum(plan.opened, axis=1))
    assert np.all(plan.opened.sum(axis=1) <= 1)
    phi = inst3.capacity
    assert np.all(plan.inventory[:L] <= phi[:L, :, None] * plan.open[:, None, :] + 1e-6)
    assert np.all(plan.inventory[L:] <= phi[L:, :, None] * plan.satisfied + 1e-6)
    assert np.all(plan.inventory[L:, :, 0] == 0)
    u = np.array([[[sol.values[pm.vars.U[s, k, t]] for t in range(1, 4)] for k in range(2)] for s in range(inst3.num_pods)])
    np.testing.assert_allclose(u, plan.streaks()[:, :, 1:], atol=1e-6)
    # flow balance rows hold within 1e-6
    a = pm.model.arrays()
    ax = a.A @ sol.values
    rows = [i for i, n in enumerate(pm.model.constr_names) if n.startswith("bal[")]
    np.testing.assert_allclose(ax[rows], a.row_lb[rows], atol=1e-6)


# -- evaluation on paths -------------------------------------------------------


def test_zero_path_no_openings(inst):
    T = inst.horizon
    path = SamplePath(np.zeros(T + 1, dtype=int), np.zeros((inst.num_pods, inst.num_items, T + 1)), np.zeros((inst.num_items, T + 1)))
    ex = evaluate_first_stage_on_path(empty_plan(inst), path, inst, HIGHS)
    assert np.all(ex.costs.table == 0)
    assert not ex.slack_flagged


def test_stress_path_flags_slack(inst, model):
    big = scale_instance(inst, 3.0)
    path = sample_path(*model, big, 1)
    ex = evaluate_plan_on_path(big, empty_plan(big), path, HIGHS)
    assert ex.slack_flagged and ex.costs.penalty > 0


def test_open_sa_nothing_shipped(inst, model):
    T = inst.horizon
    path = sample_path(*model, inst, 2)
    plan = empty_plan(inst, satisfied=0.0)
    plan.satisfied[:, :, 0] = 1
    plan.open[0, :] = 1
    plan.opened[0, 0] = 1
    plan.inventory[0, 0, :] = 100.0
    ex = evaluate_plan_on_path(inst, plan, path, HIGHS)
    dep = sum(compute_dep(path.demand[s, k, 1:], k, inst) for s in range(inst.num_pods) for k in range(inst.num_items))
    expected = inst.sa_open_cost[0] + inst.isb_ground_cost[0] * 100 + inst.handling_cost[0] * 100 * (T + 1) + dep
    assert ex.total == pytest.approx(expected, rel=1e-9)
    assert ex.costs.deprivation == pytest.approx(dep, rel=1e-12)
    assert ex.costs.part("deprivation")[:T].sum() == 0


def test_realized_equals_planned(inst, model):
    inst3 = with_horizon(inst, 3)
    path = sample_path(*model, inst3, 4)
    plan, sol, _ = solve_static(inst3, scenario_set_from_paths([path]), HIGHS, stochastic=False)
    ex = evaluate_plan_on_path(inst3, plan, path, HIGHS)
    assert not ex.slack_flagged
    assert ex.total == pytest.approx(sol.objective, rel=1e-6)


def test_components_sum_to_total(inst, model):
    inst3 = with_horizon(inst, 3)
    scen = sample_scenario_set(*model, inst3, 3, 7)
    plan, _, _ = solve_static(inst3, scen, HIGHS)
    ex = evaluate_plan_on_path(inst3, plan, sample_path(*model, inst3, 99), HIGHS)
    assert ex.costs.table.sum() == pytest.approx(ex.total, rel=1e-12)
    assert ex.costs.logistics + ex.costs.penalty + ex.costs.deprivation == pytest.approx(ex.total)
    # deprivation is recomputable from the pattern and realized demand
    dep = 0.0
    for s in range(inst3.num_pods):
        for k in range(inst3.num_items):
            dep += pattern_charges(list(plan.satisfied[s, k]), list(sample_path(*model, inst3, 99).demand[s, k]), lam)
    assert ex.costs.deprivation == pytest.approx(dep, rel=1e-9, abs=1e-9)


def test_cost_breakdown_zeros():
    c = CostBreakdown.zeros(4)
    assert c.table.shape == (6, 5) and c.total == 0


# -- rolling horizon --------------------------------------------------------------


def degenerate_model():
    spec = MarkovSpec(("H", "M", "L"), [0, 1, 0], np.eye(3))
    dists = ConditionalDists([1.0], [[1.0]] * 3, [[1.0, 1.0]], [[1.0]] * 3)
    return spec, dists


def test_rh_deterministic_chain_policies_agree(inst):
    inst2 = with_horizon(inst, 2)
    spec, dists = degenerate_model()
    path = sample_path(spec, dists, inst2, 1)
    a = run_rolling_horizon(inst2, spec, dists, path, 1, True, 0, HIGHS)
    b = run_rolling_horizon(inst2, spec, dists, path, 1, False, 0, HIGHS)
    np.testing.assert_allclose(a.costs.table, b.costs.table, rtol=1e-9, atol=1e-6)
    np.testing.assert_array_equal(a.plan.satisfied, b.plan.satisfied)
    np.testing.assert_array_equal(a.plan.open, b.plan.open)


def test_rh_execution_shape_and_accounting(inst, model):
    inst2 = with_horizon(inst, 2)
    path = sample_path(*model, inst2, 3)
    seen = []
    ex = run_rolling_horizon(inst2, *model, path, 2, True, 5, SolverConfig("highs", gap_tol=1e-4), on_roll=seen.append)
    assert [d.period for d in seen] == [0, 1, 2]
    assert len(ex.roll_gaps) == len(ex.roll_times) == 3
    assert ex.solve_time == pytest.approx(sum(ex.roll_times))
    assert np.all(np.diff(ex.plan.open, axis=1) >= 0)
    assert ex.costs.table.sum() == pytest.approx(ex.total)


def test_rh_cache_reuses_rolls(inst, model):
    inst2 = with_horizon(inst, 2)
    path = sample_path(*model, inst2, 3)
    cache = {}
    cfg = SolverConfig("highs", gap_tol=1e-4)
    a = run_rolling_horizon(inst2, *model, path, 2, True, 5, cfg, cache=cache)
    n = len(cache)
    b = run_rolling_horizon(inst2, *model, path, 2, True, 5, cfg, cache=cache)
    assert len(cache) == n
    np.testing.assert_array_equal(a.costs.table, b.costs.table)


def test_rh_rejects_bad_arguments(inst, model):
    path = sample_path(*model, inst, 1)
    with pytest.raises(ValueError):
        run_rolling_horizon(inst, *model, path, 0, True, 0, HIGHS)
    short = sample_path(*model, with_horizon(inst, 2), 1)
    with pytest.raises(ValueError):
        run_rolling_horizon(inst, *model, short, 1, True, 0, HIGHS)


def test_lookahead_keeps_history_and_observed_supply(inst, model):
    path = sample_path(*model, inst, 8)
    init = InitialState(2, np.zeros(2), np.zeros((inst.num_nodes, 2)), np.array([[1, 0]] * inst.num_pods))
    state = RollState(init, int(path.states[2]), path)
    scen = lookahead_scenarios(inst, *model, state, 4, 0, True)
    assert len(scen) == 4 and np.all(scen.states[:, 2] == path.states[2])
    for j in range(4):
        np.testing.assert_array_equal(scen.demand[j, :, :, :2], path.demand[:, :, :2])
        np.testing.assert_array_equal(scen.supply[j, :, 2], path.supply[:, 2])
    mean = lookahead_scenarios(inst, *model, state, 4, 0, False)
    np.testing.assert_allclose(mean.demand[0], scen.demand.mean(axis=0))


def test_roll_step_late_period(inst, model):
    inst3 = with_horizon(inst, 3)
    path = sample_path(*model, inst3, 8)
    init = InitialState(3, np.array([1.0, 0.0]), np.zeros((inst3.num_nodes, 2)), np.zeros((inst3.num_pods, 2), dtype=int))
    d = roll_step(inst3, *model, RollState(init, int(path.states[3]), path), 2, True, 0, HIGHS)
    assert d.period == 3
    assert np.all(d.plan.open[0, 3:] == 1) and np.all(d.plan.opened[:, 3] == 0)
