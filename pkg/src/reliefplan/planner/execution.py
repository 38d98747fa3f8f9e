"""Solving planning models and executing their decisions on sample paths.

A *plan* is the first-stage part of a solution (openings, inventories and
satisfaction indicators).  Static policies fix the whole plan up front and
are scored on a path by an elastic LP that re-optimizes the shipments
against the realized demand and supply.  The rolling-horizon controller
re-plans every period, implements only that period's first-stage decisions
and carries the resulting state forward.

Realized costs are split into opening, handling, ground, air, penalty
(elastic slack) and deprivation.  Deprivation is charged ex post from the
implemented satisfaction pattern and the realized demand.
"""

from __future__ import annotations

import dataclasses
import hashlib
import time
from typing import Callable

import numpy as np

from ..deprivation import lambda_table, streak_charges
from ..instance import Instance
from ..milp import MilpModel, MilpSolution, SolverConfig, Status, solve
from ..scenario import ConditionalDists, MarkovSpec, SamplePath, ScenarioSet, Seed, sample_scenario_set, scenario_set_from_paths, seed_key
from .builder import InitialState, PlanModel, build_model
from .heuristic import rounding_start

COST_PARTS = ("opening", "handling", "ground", "air", "penalty", "deprivation")
ZERO_TOL = 1e-9


class PlanningError(RuntimeError):
    """A planning or evaluation solve did not produce a usable solution."""


@dataclasses.dataclass(frozen=True)
class FirstStagePlan:
    """First-stage decisions over periods ``0..T`` (zero outside ``start..end``)."""

    start: int
    end: int
    open: np.ndarray  # (L, T+1)
    opened: np.ndarray  # (L, T+1)
    inventory: np.ndarray  # (N, K, T+1)
    satisfied: np.ndarray  # (S, K, T+1); period 0 counts as satisfied

    @property
    def horizon(self) -> int:
        return self.open.shape[1] - 1

    def streaks(self, initial: np.ndarray | None = None) -> np.ndarray:
        """Streak lengths ``U`` implied by ``satisfied`` from ``start`` on."""
        S, K, T1 = self.satisfied.shape
        u = np.zeros((S, K, T1), dtype=int)
        prev = np.zeros((S, K), dtype=int) if initial is None else np.asarray(initial, dtype=int)
        for t in range(T1):
            if t < self.start:
                continue
            if t == 0:
                u[:, :, 0] = 0
            else:
                u[:, :, t] = np.where(self.satisfied[:, :, t] > 0.5, 0, prev + 1)
            prev = u[:, :, t]
        return u


def _clean(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).copy()
    v[np.abs(v) < ZERO_TOL] = 0.0
    return v


def _take(values: np.ndarray, idx: np.ndarray, fill: float = 0.0) -> np.ndarray:
    out = np.full(idx.shape, fill, dtype=float)
    mask = idx >= 0
    out[mask] = values[idx[mask]]
    return out


def extract_plan(pm: PlanModel, values: np.ndarray) -> FirstStagePlan:
    vm = pm.vars
    x = np.round(_take(values, vm.x))
    y = np.round(_take(values, vm.y))
    V = _clean(_take(values, vm.V))
    a = np.round(_take(values, vm.alpha))
    a[:, :, 0] = 1.0
    V = np.maximum(V, 0.0)
    return FirstStagePlan(vm.start, vm.end, x, y, V, a)


def fix_plan(pm: PlanModel, plan: FirstStagePlan, periods: range | None = None) -> MilpModel:
    """Copy of ``pm.model`` with the plan's first-stage values fixed by bounds."""
    vm = pm.vars
    m = pm.model.copy()
    periods = vm.periods if periods is None else periods
    pairs = ((vm.x, plan.open), (vm.y, plan.opened), (vm.V, plan.inventory), (vm.alpha, plan.satisfied))
    for idx, vals in pairs:
        for pos in zip(*np.nonzero(idx >= 0)):
            if pos[-1] not in periods:
                continue
            j = int(idx[pos])
            lo, hi = m.bounds(j)
            v = min(max(float(vals[pos]), lo), hi)
            m.set_bounds(j, v, v)
    return m


@dataclasses.dataclass
class CostBreakdown:
    """Realized cost per component (rows, see :data:`COST_PARTS`) and period."""

    table: np.ndarray  # (6, T+1)

    @classmethod
    def zeros(cls, horizon: int) -> "CostBreakdown":
        return cls(np.zeros((len(COST_PARTS), horizon + 1)))

    def part(self, name: str) -> np.ndarray:
        return self.table[COST_PARTS.index(name)]

    def total_of(self, name: str) -> float:
        return float(self.part(name).sum())

    @property
    def logistics(self) -> float:
        return sum(self.total_of(p) for p in ("opening", "handling", "ground", "air"))

    @property
    def deprivation(self) -> float:
        return self.total_of("deprivation")

    @property
    def air(self) -> float:
        return self.total_of("air")

    @property
    def penalty(self) -> float:
        return self.total_of("penalty")

    @property
    def total(self) -> float:
        return self.logistics + self.penalty + self.deprivation

    def per_period_total(self) -> np.ndarray:
        return self.table.sum(axis=0)


def account_costs(pm: PlanModel, values: np.ndarray, costs: CostBreakdown, scenario: int = 0, periods: range | None = None) -> None:
    """Add the logistics and penalty costs of ``values`` to ``costs`` (in place)."""
    inst, vm, w = pm.inst, pm.vars, scenario
    values = _clean(values)
    periods = vm.periods if periods is None else periods
    L = inst.num_sas
    B, Bg, Bh = inst.ground_cost_matrix, inst.isb_ground_cost, inst.isb_air_cost
    N = inst.num_nodes
    pen = inst.isb_air_cost  # per node, scaled below
    for t in periods:
        y = _take(values, vm.y[:, t])
        costs.part("opening")[t] += float(inst.sa_open_cost @ y)
        V = _take(values, vm.V[:L, :, t])
        costs.part("handling")[t] += float((V * inst.handling_cost[None, :]).sum())
        g = _take(values, vm.g[w, :, :, t])
        f = _take(values, vm.f[w, :, :N, :, t])
        costs.part("ground")[t] += float((g * Bg[:L, None]).sum() + (f * B[:, :, None]).sum())
        h = _take(values, vm.h[w, :, :, t])
        costs.part("air")[t] += float((h * Bh[:, None]).sum())
        if pm.elastic:
            sp = _take(values, vm.slack_pos[w, :, :, t]) + _take(values, vm.slack_neg[w, :, :, t])
            costs.part("penalty")[t] += float((sp * pen[:, None]).sum() * pm.penalty_factor)


def deprivation_by_period(inst: Instance, satisfied: np.ndarray, demand: np.ndarray, start: int = 1) -> np.ndarray:
    """Ex-post deprivation per period of a satisfaction pattern.

    ``satisfied`` and ``demand`` are (S, K, T+1); each unsatisfied run is
    charged when it ends (or at ``T``).
    """
    S, K, T1 = satisfied.shape
    rates = lambda_table(inst, T1 - 1)
    out = np.zeros(T1)
    for s in range(S):
        for k in range(K):
            for t, c in streak_charges(satisfied[s, k] > 0.5, demand[s, k], rates, start):
                out[t] += c
    return out


@dataclasses.dataclass
class PathExecution:
    """Realized outcome of one policy on one sample path."""

    policy: str
    costs: CostBreakdown
    plan: FirstStagePlan
    solve_time: float = 0.0
    roll_gaps: list[float] = dataclasses.field(default_factory=list)
    roll_times: list[float] = dataclasses.field(default_factory=list)

    @property
    def total(self) -> float:
        return self.costs.total

    @property
    def slack_flagged(self) -> bool:
        """True when the elastic slacks had to absorb an infeasibility."""
        return self.costs.penalty > 0.0


def _path_scenario(path: SamplePath) -> ScenarioSet:
    return scenario_set_from_paths([path])


def _solve_lp(model: MilpModel, config: SolverConfig, what: str) -> MilpSolution:
    sol = solve(model, config, relax=True)
    if sol.status is not Status.OPTIMAL or sol.values is None:
        raise PlanningError(f"{what}: evaluation LP ended with status {sol.status.value} {sol.message}".rstrip())
    return sol


def evaluate_plan_on_path(
    inst: Instance,
    plan: FirstStagePlan,
    path: SamplePath,
    config: SolverConfig,
    *,
    policy: str = "static",
    pod_bounds: str = "capacity",
) -> PathExecution:
    """Score a static plan on ``path`` with an elastic recourse LP."""
    pm = build_model(inst, _path_scenario(path), pod_bounds=pod_bounds, elastic=True, include_deprivation=False, name="eval")
    sol = _solve_lp(fix_plan(pm, plan), config, f"{policy} evaluation")
    costs = CostBreakdown.zeros(inst.horizon)
    account_costs(pm, sol.values, costs)
    costs.part("deprivation")[:] = deprivation_by_period(inst, plan.satisfied, path.demand)
    return PathExecution(policy, costs, plan)


def evaluate_first_stage_on_path(
    plan: FirstStagePlan, path: SamplePath, inst: Instance, config: SolverConfig | None = None, **kw
) -> PathExecution:
    """:func:`evaluate_plan_on_path` with the argument order plan, path, instance."""
    return evaluate_plan_on_path(inst, plan, path, config or SolverConfig(), **kw)


def solve_plan(pm: PlanModel, config: SolverConfig, *, heuristic: bool = False, what: str = "plan") -> tuple[FirstStagePlan, MilpSolution, float]:
    """Solve a planning model; returns the plan, the raw solution and the wall time."""
    t0 = time.perf_counter()
    start = rounding_start(pm, config) if heuristic else None
    sol = solve(pm.model, config, start=start)
    elapsed = time.perf_counter() - t0
    if sol.values is None or sol.status in (Status.ERROR, Status.INFEASIBLE, Status.UNBOUNDED):
        raise PlanningError(f"{what}: solver ended with status {sol.status.value} {sol.message}".rstrip())
    return extract_plan(pm, sol.values), sol, elapsed


def solve_static(
    inst: Instance,
    scen: ScenarioSet,
    config: SolverConfig,
    *,
    stochastic: bool = True,
    pod_bounds: str = "capacity",
    heuristic: bool = False,
) -> tuple[FirstStagePlan, MilpSolution, float]:
    """Static S_2SSP (``stochastic``) or S_D (mean scenario) plan."""
    name = "S_2SSP" if stochastic else "S_D"
    pm = build_model(inst, scen if stochastic else scen.mean(), pod_bounds=pod_bounds, name=name)
    return solve_plan(pm, config, heuristic=heuristic, what=name)


# -- rolling horizon -----------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RollState:
    """Everything a roll at ``period`` may depend on.

    ``history`` holds the realized demand and supply of periods before
    ``period`` plus the supply limit of ``period`` itself (later entries are
    ignored); ``markov_state`` is the state observed at ``period``.
    """

    init: InitialState
    markov_state: int
    history: SamplePath

    @property
    def period(self) -> int:
        return self.init.period

    def digest(self) -> tuple[int, int]:
        """Two 31-bit integers identifying the roll's decision-relevant inputs.

        Realized demand matters only inside open unsatisfied streaks, so only
        those entries enter the digest.
        """
        t = self.period
        h = hashlib.blake2b(digest_size=8)
        h.update(np.array([t, self.markov_state], dtype=np.int64).tobytes())
        h.update(np.asarray(self.history.supply[:, t], dtype=np.float64).tobytes())
        h.update(np.asarray(self.init.open_sas, dtype=np.float64).tobytes())
        h.update(np.asarray(self.init.inventory, dtype=np.float64).tobytes())
        streak = np.asarray(self.init.streak, dtype=np.int64)
        h.update(streak.tobytes())
        for s, k in zip(*np.nonzero(streak)):
            u = int(streak[s, k])
            h.update(np.asarray(self.history.demand[s, k, t - u : t], dtype=np.float64).tobytes())
        v = int.from_bytes(h.digest(), "little")
        return v & 0x7FFFFFFF, (v >> 31) & 0x7FFFFFFF


@dataclasses.dataclass(frozen=True)
class RollDecision:
    period: int
    plan: FirstStagePlan
    objective: float
    gap: float
    solve_time: float
    status: str


def lookahead_scenarios(
    inst: Instance, spec: MarkovSpec, dists: ConditionalDists, state: RollState, n: int, seed: Seed, stochastic: bool
) -> ScenarioSet:
    """Scenarios for periods ``t..T`` from the observed state.

    Periods before ``t`` carry the realized history and period ``t`` the
    observed supply limit; demand from ``t`` on stays uncertain.

    The sampling key is ``(*seed, t, *state.digest())``, so two paths with the
    same decision-relevant history get the same lookahead.
    """
    t = state.period
    key = seed_key(seed, t, *state.digest())
    scen = sample_scenario_set(spec, dists, inst, n, key, start_state=state.markov_state, start_period=t)
    scen = scen.with_history(state.history, t)
    scen.supply[:, :, t] = state.history.supply[:, t]
    return scen if stochastic else scen.mean()


def roll_step(
    inst: Instance,
    spec: MarkovSpec,
    dists: ConditionalDists,
    state: RollState,
    n_per_roll: int,
    stochastic: bool,
    seed: Seed,
    config: SolverConfig,
    *,
    pod_bounds: str = "capacity",
    heuristic: bool = False,
) -> RollDecision:
    """Solve one lookahead model and return its plan (period ``t`` is the part to implement)."""
    t = state.period
    scen = lookahead_scenarios(inst, spec, dists, state, n_per_roll, seed, stochastic)
    name = "RH_2SSP" if stochastic else "RH_D"
    pm = build_model(inst, scen, state.init, pod_bounds=pod_bounds, name=f"{name}_t{t}")
    plan, sol, elapsed = solve_plan(pm, config, heuristic=heuristic, what=f"{name} roll {t}")
    return RollDecision(t, plan, float(sol.objective), float(sol.gap or 0.0), elapsed, sol.status.value)


RollCache = dict


def run_rolling_horizon(
    inst: Instance,
    spec: MarkovSpec,
    dists: ConditionalDists,
    path: SamplePath,
    n_per_roll: int,
    stochastic: bool,
    seed: Seed,
    config: SolverConfig,
    *,
    pod_bounds: str = "capacity",
    cache: RollCache | None = None,
    heuristic: bool = False,
    on_roll: Callable[[RollDecision], None] | None = None,
) -> PathExecution:
    """Execute the rolling-horizon policy along ``path``.

    ``cache`` (a dict shared across paths) memoizes rolls by their
    decision-relevant inputs; a hit reuses the stored decision and its
    recorded solve time.
    """
    if n_per_roll < 1:
        raise ValueError(f"n_per_roll must be >= 1, got {n_per_roll}")
    if path.horizon != inst.horizon or path.start_period != 0:
        raise ValueError("path must cover periods 0..T")
    T, L, N, S, K = inst.horizon, inst.num_sas, inst.num_nodes, inst.num_pods, inst.num_items
    policy = "RH_2SSP" if stochastic else "RH_D"
    implemented = FirstStagePlan(0, T, np.zeros((L, T + 1)), np.zeros((L, T + 1)), np.zeros((N, K, T + 1)), np.ones((S, K, T + 1)))
    costs = CostBreakdown.zeros(T)
    init = InitialState.fresh(inst)
    execution = PathExecution(policy, costs, implemented)
    path_scen = _path_scenario(path)
    for t in range(T + 1):
        state = RollState(init, int(path.states[t]), path)
        key = (policy, n_per_roll, state.digest())
        decision = None if cache is None else cache.get(key)
        if decision is None:
            try:
                decision = roll_step(inst, spec, dists, state, n_per_roll, stochastic, seed, config, pod_bounds=pod_bounds, heuristic=heuristic)
            except PlanningError as exc:
                raise PlanningError(f"{policy} path roll {t}: {exc}") from exc
            if cache is not None:
                cache[key] = decision
        if on_roll is not None:
            on_roll(decision)
        execution.roll_gaps.append(decision.gap)
        execution.roll_times.append(decision.solve_time)
        p = decision.plan
        implemented.open[:, t] = p.open[:, t]
        implemented.opened[:, t] = p.opened[:, t]
        implemented.inventory[:, :, t] = p.inventory[:, :, t]
        if t > 0:
            implemented.satisfied[:, :, t] = p.satisfied[:, :, t]

        # implement period t against the realized demand and supply
        pm = build_model(inst, path_scen, init, end_period=t, pod_bounds=pod_bounds, elastic=True, include_deprivation=False, name="implement")
        sol = _solve_lp(fix_plan(pm, implemented, range(t, t + 1)), config, f"{policy} roll {t} implementation")
        account_costs(pm, sol.values, costs, periods=range(t, t + 1))

        streak = init.streak.copy() if t > 0 else np.zeros((S, K), dtype=int)
        if t > 0:
            streak = np.where(implemented.satisfied[:, :, t] > 0.5, 0, streak + 1)
        if t < T:
            init = InitialState(t + 1, implemented.open[:, t].copy(), implemented.inventory[:, :, t].copy(), streak)
    costs.part("deprivation")[:] = deprivation_by_period(inst, implemented.satisfied, path.demand)
    execution.solve_time = float(sum(execution.roll_times))
    return execution
