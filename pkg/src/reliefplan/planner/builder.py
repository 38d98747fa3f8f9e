"""MILP builder for the relief planning models.

One builder serves every model in the package:

* the static two-stage stochastic program (many scenarios, period 0 onward),
* the deterministic model (one scenario, usually a mean scenario),
* lookahead models of the rolling-horizon controller, which start at a later
  period from a carried-over state (open SAs, inventories, streak lengths),
* the evaluation LP, in which the first stage is fixed by bounds and elastic
  slacks keep the flow balances feasible.

First-stage variables (shared by all scenarios)
    ``y[i,t]``, ``x[i,t]``  SA opening / open status (binary)
    ``V[i,k,t]``           inventory at SA or POD node ``i``
    ``a[s,k,t]``           demand of item ``k`` at POD ``s`` satisfied in ``t``
    ``z[s,k,t,u]``         streak indicator: ``U[s,k,t] == u``
    ``U[s,k,t]``           streak length, ``sum(u * z)``

Second-stage variables (one copy per scenario ``w``)
    ``g[w,i,k,t]``  ground shipment ISB -> SA
    ``h[w,i,k,t]``  air shipment ISB -> any node
    ``f[w,i,j,k,t]`` shipment between nodes; ``j == N`` is the dummy sink,
    reachable from PODs only and free of charge

Streak linearization.  With ``b`` the last period before the model starts
and ``u_b`` the streak length carried into it, the streak at period ``t`` can
only take values in ``{0, ..., t-b-1} ∪ {u_b + t - b}``; one indicator is
created per reachable value.  ``z[t,0] = a[t]``, ``sum_u z[t,u] = 1`` and for
``u >= 1``::

    z[t,u] <= z[t-1,u-1]

Read as a flow over streak states, ``z[t-1,u-1] - z[t,u]`` is the mass that
moves from state ``u-1`` back to 0 at ``t``; these differences are
nonnegative and, because both layers sum to one, add up to ``a[t]``.  So the
lower bound ``z[t,u] >= z[t-1,u-1] - a[t]`` holds without being stated, and
for binary ``a`` the indicators follow ``z[t,u] = z[t-1,u-1] AND NOT a[t]``.  The deprivation charged when a
streak of length ``u`` ending at ``t-1`` is broken at ``t`` is the product
``z[t-1,u] * a[t]``, which equals ``z[t-1,u] - z[t,u+1]`` exactly; the
objective uses that difference, so no product variables are needed.

POD bounds.  ``pod_bounds="capacity"`` (default) caps POD inflow and air
deliveries at ``phi * a[t]``; ``"inventory"`` caps them at the closing
inventory ``V[t]``.  Under the latter, a POD whose previous inventory is
zero (always the case after an unsatisfied period) can only be served if
air deliveries alone cover its demand.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..deprivation import DeprivationTable, build_dep_table, expected_dep_coefficients
from ..instance import Instance
from ..milp import MilpModel, VarType
from ..scenario import ScenarioSet

POD_BOUNDS = ("capacity", "inventory")
PENALTY_FACTOR = 10.0


@dataclasses.dataclass(frozen=True)
class InitialState:
    """State carried into a model that starts at ``period``.

    ``open_sas`` and ``inventory`` describe period ``period - 1``;
    ``streak[s, k]`` is the streak length at the end of ``period - 1``.
    Ignored when ``period == 0``.
    """

    period: int
    open_sas: np.ndarray  # (L,)
    inventory: np.ndarray  # (N, K)
    streak: np.ndarray  # (S, K)

    @classmethod
    def fresh(cls, inst: Instance) -> "InitialState":
        return cls(0, np.zeros(inst.num_sas), np.zeros((inst.num_nodes, inst.num_items)), np.zeros((inst.num_pods, inst.num_items), dtype=int))

    def check(self, inst: Instance) -> None:
        if not 0 <= self.period <= inst.horizon:
            raise ValueError(f"start period {self.period} outside 0..{inst.horizon}")
        if self.open_sas.shape != (inst.num_sas,) or self.inventory.shape != (inst.num_nodes, inst.num_items) or self.streak.shape != (inst.num_pods, inst.num_items):
            raise ValueError("initial state does not match the instance dimensions")


@dataclasses.dataclass
class VarMap:
    """Variable positions by index tuple; -1 where a variable does not exist."""

    start: int
    end: int
    x: np.ndarray
    y: np.ndarray
    V: np.ndarray
    alpha: np.ndarray
    U: np.ndarray
    z: dict[tuple[int, int, int], dict[int, int]]
    g: np.ndarray
    h: np.ndarray
    f: np.ndarray
    slack_pos: np.ndarray
    slack_neg: np.ndarray

    @property
    def periods(self) -> range:
        return range(self.start, self.end + 1)

    def first_stage_columns(self) -> np.ndarray:
        cols = [self.x, self.y, self.V, self.alpha]
        idx = np.concatenate([c.ravel() for c in cols])
        return idx[idx >= 0]


@dataclasses.dataclass(frozen=True)
class PlanModel:
    model: MilpModel
    vars: VarMap
    inst: Instance
    scenarios: ScenarioSet
    init: InitialState
    elastic: bool
    penalty_factor: float = PENALTY_FACTOR


def _check_scenarios(inst: Instance, scen: ScenarioSet) -> None:
    n = len(scen)
    S, K, T = inst.num_pods, inst.num_items, inst.horizon
    if scen.demand.shape != (n, S, K, T + 1) or scen.supply.shape != (n, K, T + 1):
        raise ValueError(f"scenario arrays {scen.demand.shape}/{scen.supply.shape} do not match the instance (S={S}, K={K}, T={T})")


def build_model(
    inst: Instance,
    scen: ScenarioSet,
    init: InitialState | None = None,
    *,
    end_period: int | None = None,
    dep: DeprivationTable | None = None,
    pod_bounds: str = "capacity",
    elastic: bool = False,
    penalty_factor: float = PENALTY_FACTOR,
    include_deprivation: bool = True,
    name: str = "plan",
) -> PlanModel:
    """Build the planning MILP over periods ``init.period .. end_period``.

    Scenario arrays cover periods ``0..T``; entries before the start period
    are read as realized history when forming streak costs.
    """
    if pod_bounds not in POD_BOUNDS:
        raise ValueError(f"pod_bounds must be one of {POD_BOUNDS}")
    _check_scenarios(inst, scen)
    init = InitialState.fresh(inst) if init is None else init
    init.check(inst)
    L, S, K, N, T = inst.num_sas, inst.num_pods, inst.num_items, inst.num_nodes, inst.horizon
    n = len(scen)
    t0 = init.period
    t1 = T if end_period is None else end_period
    if not t0 <= t1 <= T:
        raise ValueError(f"end period {t1} outside {t0}..{T}")
    P = range(t0, t1 + 1)
    probs = scen.probs
    phi = inst.capacity

    if include_deprivation:
        if dep is None:
            dep = build_dep_table(inst, scen.demand)
        elif dep.dep.shape != (n, S, K, T + 1, T + 1):
            raise ValueError(f"deprivation table {dep.dep.shape} does not match {n} scenarios over T={T}")
        edep = expected_dep_coefficients(dep, probs)
    else:
        edep = None

    m = MilpModel(name)
    shape_t = T + 1
    vm = VarMap(
        start=t0,
        end=t1,
        x=np.full((L, shape_t), -1),
        y=np.full((L, shape_t), -1),
        V=np.full((N, K, shape_t), -1),
        alpha=np.full((S, K, shape_t), -1),
        U=np.full((S, K, shape_t), -1),
        z={},
        g=np.full((n, L, K, shape_t), -1),
        h=np.full((n, N, K, shape_t), -1),
        f=np.full((n, N, N + 1, K, shape_t), -1),
        slack_pos=np.full((n, N, K, shape_t), -1),
        slack_neg=np.full((n, N, K, shape_t), -1),
    )
    x_prev = np.zeros(L) if t0 == 0 else np.round(init.open_sas)
    v_prev = np.zeros((N, K)) if t0 == 0 else init.inventory

    # -- openings ----------------------------------------------------------
    for i in range(L):
        closed = x_prev[i] < 0.5
        for t in P:
            vm.y[i, t] = m.add_var(f"y[{i},{t}]", 0.0, 1.0 if closed else 0.0, VarType.BINARY, obj=inst.sa_open_cost[i])
            vm.x[i, t] = m.add_var(f"x[{i},{t}]", 0.0, 1.0, VarType.BINARY)
            row = {int(vm.x[i, t]): 1.0}
            for tt in range(t0, t + 1):
                row[int(vm.y[i, tt])] = -1.0
            m.add_constr(row, "=", float(x_prev[i]), f"open[{i},{t}]")
        if closed:
            m.add_constr({int(vm.y[i, t]): 1.0 for t in P}, "<=", 1.0, f"once[{i}]")

    # -- inventories -----------------------------------------------------
    for node in range(N):
        is_sa = node < L
        for k in range(K):
            for t in P:
                if not is_sa and t == 0:
                    continue  # POD inventory at period 0 is zero
                vm.V[node, k, t] = m.add_var(f"V[{node},{k},{t}]", 0.0, phi[node, k], obj=inst.handling_cost[k] if is_sa else 0.0)
                if is_sa:
                    m.add_constr({int(vm.V[node, k, t]): 1.0, int(vm.x[node, t]): -phi[node, k]}, "<=", 0.0, f"sacap[{node},{k},{t}]")

    def v_term(node: int, k: int, t: int) -> tuple[int, float]:
        """(column, constant) of V at ``t``; column -1 when it is data."""
        if t < t0:
            return -1, float(v_prev[node, k])
        if vm.V[node, k, t] < 0:
            return -1, 0.0
        return int(vm.V[node, k, t]), 0.0

    # -- satisfaction and streaks ---------------------------------------
    base = t0 - 1 if t0 > 0 else 0
    for s in range(S):
        node = L + s
        for k in range(K):
            for t in P:
                if t == 0:
                    continue
                a = vm.alpha[s, k, t] = m.add_var(f"a[{s},{k},{t}]", 0.0, 1.0, VarType.BINARY)
                m.add_constr({int(vm.V[node, k, t]): 1.0, int(a): -phi[node, k]}, "<=", 0.0, f"podcap[{s},{k},{t}]")
            u_b = int(init.streak[s, k]) if t0 > 0 else 0
            zprev: dict[int, int] = {u_b: -1}  # -1: the carried-in streak, known with certainty
            for t in range(base + 1, t1 + 1):
                a = int(vm.alpha[s, k, t])
                reach = sorted(set(range(t - base)) | {u_b + t - base})
                zt = {u: m.add_var(f"z[{s},{k},{t},{u}]", 0.0, 1.0) for u in reach}
                vm.z[(s, k, t)] = zt
                m.add_constr({j: 1.0 for j in zt.values()}, "=", 1.0, f"zsum[{s},{k},{t}]")
                m.add_constr({zt[0]: 1.0, a: -1.0}, "=", 0.0, f"zsat[{s},{k},{t}]")
                for u in reach:
                    if u == 0:
                        continue
                    prev = zprev[u - 1]
                    if prev < 0:
                        m.add_constr({zt[u]: 1.0, a: 1.0}, "=", 1.0, f"zrun[{s},{k},{t},{u}]")
                    else:
                        m.add_constr({zt[u]: 1.0, prev: -1.0}, "<=", 0.0, f"zup[{s},{k},{t},{u}]")
                ucol = vm.U[s, k, t] = m.add_var(f"U[{s},{k},{t}]", 0.0, float(u_b + t1))
                row = {int(ucol): 1.0}
                for u, j in zt.items():
                    if u:
                        row[j] = -float(u)
                m.add_constr(row, "=", 0.0, f"udef[{s},{k},{t}]")
                if edep is not None:
                    # streak of length u ending at t-1 broken at t
                    for u, prev in zprev.items():
                        coef = edep[s, k, u, t - 1] if u else 0.0
                        if coef == 0.0:
                            continue
                        if prev < 0:
                            m.add_obj(a, coef)
                        else:
                            m.add_obj(prev, coef)
                            m.add_obj(zt[u + 1], -coef)
                zprev = zt
            if edep is not None and t1 > base:
                for u, j in zprev.items():
                    coef = edep[s, k, u, t1] if u else 0.0
                    if coef:
                        m.add_obj(j, coef)

    # -- second stage ----------------------------------------------------
    B, Bg, Bh = inst.ground_cost_matrix, inst.isb_ground_cost, inst.isb_air_cost
    for w in range(n):
        pw = float(probs[w])
        D, R = scen.demand[w], scen.supply[w]

        def slack(row: dict[int, float], node: int, k: int, t: int) -> None:
            if not elastic:
                return
            pen = pw * penalty_factor * Bh[node]
            sp_ = vm.slack_pos[w, node, k, t] = m.add_var(f"sp[{w},{node},{k},{t}]", obj=pen)
            sn_ = vm.slack_neg[w, node, k, t] = m.add_var(f"sn[{w},{node},{k},{t}]", obj=pen)
            row[int(sp_)] = 1.0
            row[int(sn_)] = -1.0

        for t in P:
            if t == 0:
                for k in range(K):
                    for i in range(L):
                        vm.g[w, i, k, 0] = m.add_var(f"g[{w},{i},{k},0]", obj=pw * Bg[i])
                        row = {int(vm.g[w, i, k, 0]): 1.0, int(vm.V[i, k, 0]): -1.0}
                        slack(row, i, k, 0)
                        m.add_constr(row, "=", 0.0, f"init[{w},{i},{k}]")
                    m.add_constr({int(vm.g[w, i, k, 0]): 1.0 for i in range(L)}, "<=", float(R[k, 0]), f"supply[{w},{k},0]")
                continue
            for k in range(K):
                for i in range(L):
                    vm.g[w, i, k, t] = m.add_var(f"g[{w},{i},{k},{t}]", obj=pw * Bg[i])
                for i in range(N):
                    vm.h[w, i, k, t] = m.add_var(f"h[{w},{i},{k},{t}]", obj=pw * Bh[i])
                    for j in range(N):
                        if j != i:
                            vm.f[w, i, j, k, t] = m.add_var(f"f[{w},{i},{j},{k},{t}]", obj=pw * B[i, j])
                    if i >= L:
                        vm.f[w, i, N, k, t] = m.add_var(f"f[{w},{i},{N},{k},{t}]")
                m.add_constr({int(vm.g[w, i, k, t]): 1.0 for i in range(L)}, "<=", float(R[k, t]), f"supply[{w},{k},{t}]")
                for i in range(N):
                    vt, _ = v_term(i, k, t)
                    vp, vp_const = v_term(i, k, t - 1)
                    out_cols = [int(vm.f[w, i, j, k, t]) for j in range(N) if j != i]
                    in_cols = [int(vm.f[w, j, i, k, t]) for j in range(N) if j != i]
                    hcol = int(vm.h[w, i, k, t])
                    bal: dict[int, float] = {vt: 1.0}
                    for c in out_cols:
                        bal[c] = 1.0
                    for c in in_cols:
                        bal[c] = -1.0
                    bal[hcol] = -1.0
                    if vp >= 0:
                        bal[vp] = -1.0
                    if i < L:
                        gcol = int(vm.g[w, i, k, t])
                        bal[gcol] = -1.0
                        m.add_constr({gcol: 1.0, hcol: 1.0, vt: -1.0}, "<=", 0.0, f"avail[{w},{i},{k},{t}]")
                        slack(bal, i, k, t)
                        m.add_constr(bal, "=", vp_const, f"bal[{w},{i},{k},{t}]")
                        continue
                    s = i - L
                    a = int(vm.alpha[s, k, t])
                    bal[int(vm.f[w, i, N, k, t])] = 1.0
                    bal[a] = float(D[s, k, t])
                    slack(bal, i, k, t)
                    m.add_constr(bal, "=", vp_const, f"bal[{w},{i},{k},{t}]")
                    row = {c: 1.0 for c in out_cols}
                    row[vt] = -1.0
                    m.add_constr(row, "<=", 0.0, f"podout[{w},{i},{k},{t}]")
                    row = {c: 1.0 for c in in_cols}
                    cap_col, cap_coef = (a, -phi[i, k]) if pod_bounds == "capacity" else (vt, -1.0)
                    row[cap_col] = cap_coef
                    m.add_constr(row, "<=", 0.0, f"podin[{w},{i},{k},{t}]")
                    m.add_constr({hcol: 1.0, cap_col: cap_coef}, "<=", 0.0, f"podair[{w},{i},{k},{t}]")
    return PlanModel(m, vm, inst, scen, init, elastic, penalty_factor)


def mean_scenario(scen: ScenarioSet) -> ScenarioSet:
    """Element-wise probability-weighted mean of demand and supply."""
    if len(scen) == 0:
        raise ValueError("empty scenario set")
    return scen.mean()


def build_static_2ssp(inst: Instance, scen: ScenarioSet, dep: DeprivationTable | None = None, **kw) -> PlanModel:
    """Two-stage stochastic program over all scenarios of ``scen``."""
    return build_model(inst, scen, kw.pop("init", None), dep=dep, name=kw.pop("name", "S_2SSP"), **kw)


def build_deterministic(inst: Instance, scen: ScenarioSet, **kw) -> PlanModel:
    """Single-scenario model on the mean of ``scen``."""
    return build_model(inst, mean_scenario(scen), kw.pop("init", None), name=kw.pop("name", "S_D"), **kw)
