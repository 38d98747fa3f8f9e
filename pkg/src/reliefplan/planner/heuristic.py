"""Rounding heuristic that supplies a starting incumbent for planning MILPs.

Almost all of the LP gap of the planning models comes from fractional SA
openings; once the openings are fixed, rounding the satisfaction indicators
of the relaxation is usually within a fraction of a percent of optimal.
"""

from __future__ import annotations

import numpy as np

from ..milp import MilpModel, SolverConfig, Status, solve
from .builder import PlanModel

THRESHOLD = 0.5


def _fixed_copy(model: MilpModel, cols: np.ndarray, values: np.ndarray) -> MilpModel:
    m = model.copy()
    for j, v in zip(cols.tolist(), values.tolist()):
        m.set_bounds(j, v, v)
    return m


def _relax(model: MilpModel, config: SolverConfig) -> np.ndarray | None:
    sol = solve(model, config, relax=True)
    return sol.values if sol.status is Status.OPTIMAL else None


def opening_pattern(pm: PlanModel, x_lp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Columns and 0/1 values of ``y`` and ``x`` after rounding the open status.

    An SA counts as opened at the first period where its relaxed open status
    reaches :data:`THRESHOLD`; ``x`` is then 1 from there on.
    """
    vm = pm.vars
    cols, vals = [], []
    for i in range(vm.x.shape[0]):
        periods = [t for t in vm.periods if vm.x[i, t] >= 0]
        xs = np.array([x_lp[vm.x[i, t]] for t in periods])
        fixed_open = pm.model.bounds(int(vm.y[i, periods[0]]))[1] == 0.0 and xs[0] > THRESHOLD
        first = 0 if fixed_open else next((p for p, v in enumerate(xs) if v >= THRESHOLD), None)
        for p, t in enumerate(periods):
            is_open = first is not None and p >= first
            cols += [vm.x[i, t], vm.y[i, t]]
            vals += [float(is_open), float(not fixed_open and first is not None and p == first)]
    return np.array(cols, dtype=int), np.array(vals)


def rounding_start(pm: PlanModel, config: SolverConfig) -> np.ndarray | None:
    """A feasible point of ``pm.model``, or None when the heuristic fails."""
    model = pm.model
    x_lp = _relax(model, config)
    if x_lp is None:
        return None
    cols, vals = opening_pattern(pm, x_lp)
    fixed = _fixed_copy(model, cols, vals)
    x_lp = _relax(fixed, config)
    if x_lp is None:
        return None
    alpha = pm.vars.alpha[pm.vars.alpha >= 0]
    a_vals = (x_lp[alpha] >= THRESHOLD).astype(float)
    fixed = _fixed_copy(fixed, alpha, a_vals)
    point = _relax(fixed, config)
    if point is None:
        return None
    ints = np.flatnonzero(model.arrays().integrality)
    point[ints] = np.round(point[ints])
    return point
