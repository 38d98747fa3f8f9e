"""
Re-planning every period
========================

The rolling-horizon controller solves a fresh lookahead model each period
from what has actually happened so far, implements only the current
period and moves on.  The second half shows the single-roll mode a planner
would use by hand: describe today's situation, get today's plan.
"""

import numpy as np

from reliefplan import default_instance, default_stochastic_model, sample_path
from reliefplan.instance import with_horizon
from reliefplan.milp import SolverConfig
from reliefplan.planner import InitialState, RollState, roll_step, run_rolling_horizon
from reliefplan.scenario import SamplePath

inst = with_horizon(default_instance(), 3)
spec, dists = default_stochastic_model()
cfg = SolverConfig("highs", gap_tol=1e-3)
path = sample_path(spec, dists, inst, seed=(42, 1, 3))


def show(decision):
    t = decision.period
    served = int(decision.plan.satisfied[:, :, t].sum()) if t else "-"
    print(f"  roll {t}: objective {decision.objective:11.2f}  gap {decision.gap:.4f}  "
          f"open {decision.plan.open[:, t].astype(int).tolist()}  served {served}")


for stochastic in (False, True):
    name = "RH_2SSP" if stochastic else "RH_D"
    print(name)
    ex = run_rolling_horizon(inst, spec, dists, path, 4, stochastic, seed=(42, 3, 0), config=cfg, on_roll=show)
    print(f"  realized total {ex.total:.2f}  logistics {ex.costs.logistics:.2f}  deprivation {ex.costs.deprivation:.2f}")
    print("  cost per period", np.round(ex.costs.per_period_total(), 1).tolist())

# %%
# Single roll from an observed state: period 2, SA 1 open since period 0,
# 80 units of item 1 left there, POD 3 has gone one period without item 2.
T, S, K = inst.horizon, inst.num_pods, inst.num_items
inventory = np.zeros((inst.num_nodes, K))
inventory[0, 0] = 80.0
streak = np.zeros((S, K), dtype=int)
streak[0, 1] = 1
history = SamplePath(
    states=np.array([-1, -1, spec.index("M"), -1]),
    demand=np.where(np.arange(T + 1) < 2, path.demand, 0.0),
    supply=np.where(np.arange(T + 1) == 2, path.supply, 0.0),
)
state = RollState(InitialState(2, np.array([1.0, 0.0]), inventory, streak), spec.index("M"), history)
decision = roll_step(inst, spec, dists, state, 4, True, seed=(42, 3, 0), config=cfg)
print()
print("recommended for period 2:")
print("  SA open:", decision.plan.open[:, 2].astype(int).tolist())
print("  SA inventory:", np.round(decision.plan.inventory[: inst.num_sas, :, 2], 1).tolist())
print("  PODs to serve (item 1, item 2):", decision.plan.satisfied[:, :, 2].astype(int).tolist())
