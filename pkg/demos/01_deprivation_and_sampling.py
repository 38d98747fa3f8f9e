"""
Deprivation costs and sampled disaster paths
============================================

Unmet demand gets more expensive the longer it goes unserved.  This script
prints the per-unit rate, prices a few shortage patterns and then draws a
sample path from the default damage model.
"""

import numpy as np

from reliefplan import compute_dep, default_instance, default_stochastic_model, sample_path
from reliefplan.deprivation import lambda_table

inst = default_instance()
spec, dists = default_stochastic_model()

# per-unit rate after t periods without service
rates = lambda_table(inst, inst.horizon)
for t, r in enumerate(rates):
    print(f"lambda({t}) = {r:9.4f}")

# a dip in the middle of a three-period shortage: the lower layer of 100 units
# waits three periods, the two 20-unit peaks one period each
print()
for amounts in ([120, 100, 120], [100, 100, 100], [100, 0, 100], [50]):
    print(f"{str(amounts):18s} -> {compute_dep(amounts, 0, inst):10.2f}")

# %%
# One path: Markov damage state, ground supply limit and demand per period.
path = sample_path(spec, dists, inst, seed=(42, 1, 0))
print()
print("period state  supply(k1)  supply(k2)  total demand(k1)  total demand(k2)")
for t in range(inst.horizon + 1):
    d = path.demand[:, :, t].sum(axis=0)
    print(f"{t:6d} {spec.states[path.states[t]]:>5s} {path.supply[0, t]:11.1f} {path.supply[1, t]:11.1f} {d[0]:17.1f} {d[1]:17.1f}")

# Heavy damage (L) pushes demand multipliers up and supply levels down.
for name in spec.states:
    m = spec.index(name)
    mean_mult = dists.demand_brackets.mean(axis=1) @ dists.demand_probs[m]
    mean_supply = dists.supply_levels @ dists.supply_probs[m]
    print(f"state {name}: expected demand multiplier {mean_mult:.3f}, expected supply level {mean_supply:.3f}")

# The chain is sticky, so a bad start tends to stay bad.
print(np.round(np.linalg.matrix_power(spec.transition, 5), 3))
