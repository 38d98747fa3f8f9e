"""Deprivation cost of unmet demand under fluctuating demand.

The per-unit rate ``lambda(t)`` grows with the number of consecutive periods
``t`` an amount has gone unserved.  For a streak of unmet demands the cost is
found by peeling off the smallest amount (which has been missing for the
whole streak), charging it at the rate of the streak length, and recursing on
the pieces that remain between the zeros.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .instance import Instance

ZERO_TOL = 1e-9


def lambda_fn(inst: Instance, item: int, t: float) -> float:
    """Deprivation cost per unit after ``t`` unserved periods.

    ``weight * delta * (exp(1.5 + 0.12 t) - exp(1.5))``; identical for all
    items, ``item`` is accepted for interface symmetry only.
    """
    if t < 0:
        raise ValueError(f"deprivation time must be nonnegative, got {t}")
    return inst.deprivation_weight * inst.deprivation_delta * (math.exp(1.5 + 0.12 * t) - math.exp(1.5))


def lambda_table(inst: Instance, max_len: int) -> np.ndarray:
    """``lambda(0..max_len)`` as an array."""
    t = np.arange(max_len + 1, dtype=float)
    return inst.deprivation_weight * inst.deprivation_delta * (np.exp(1.5 + 0.12 * t) - math.exp(1.5))


def dep_from_rates(amounts: Sequence[float], rates: Sequence[float]) -> float:
    """Recursive min-peeling cost of a demand list, with ``rates[n]`` the unit cost of an n-period streak."""
    total = 0.0
    stack = [list(map(float, amounts))]
    while stack:
        dl = stack.pop()
        if not dl:
            continue
        d_min = min(dl)
        if d_min > ZERO_TOL:
            total += d_min * rates[len(dl)]
        else:
            d_min = max(d_min, 0.0)
        rest = [d - d_min for d in dl]
        run: list[float] = []
        for d in rest:
            if d <= ZERO_TOL:
                if run:
                    stack.append(run)
                    run = []
            else:
                run.append(d)
        if run:
            stack.append(run)
    return total


def compute_dep(amounts: Sequence[float], item: int, inst: Instance) -> float:
    """Deprivation cost of a list of consecutive unmet demands."""
    if len(amounts) == 0:
        raise ValueError("demand list must be nonempty")
    if any(a < 0 for a in amounts):
        raise ValueError("demand amounts must be nonnegative")
    return dep_from_rates(amounts, lambda_table(inst, len(amounts)))


@dataclasses.dataclass(frozen=True)
class DeprivationTable:
    """``dep[w, i, k, tau, t]``: cost of a ``tau``-period streak ending at period ``t``.

    ``i`` is the POD position (0-based among PODs).  Entries with ``tau > t``
    are undefined and stored as NaN.
    """

    dep: np.ndarray

    @property
    def num_scenarios(self) -> int:
        return self.dep.shape[0]

    @property
    def horizon(self) -> int:
        return self.dep.shape[-1] - 1

    def get(self, scenario: int, pod: int, item: int, tau: int, t: int) -> float:
        if not 0 <= tau <= t:
            raise IndexError(f"streak length {tau} undefined at period {t}")
        return float(self.dep[scenario, pod, item, tau, t])


def build_dep_table(inst: Instance, demand: np.ndarray) -> DeprivationTable:
    """Precompute every streak cost for each scenario's demand.

    Parameters
    ----------
    demand : array, shape (n_scenarios, S, K, T+1) or (S, K, T+1)
        Demand per POD, item and period ``0..T``.  Period 0 demand is 0.
    """
    demand = np.asarray(demand, dtype=float)
    if demand.ndim == 3:
        demand = demand[None]
    n, S, K, T1 = demand.shape
    if (S, K) != (inst.num_pods, inst.num_items):
        raise ValueError(f"demand shape {demand.shape[1:3]} does not match instance ({inst.num_pods}, {inst.num_items})")
    if np.any(demand < 0):
        raise ValueError("demand must be nonnegative")
    T = T1 - 1
    rates = lambda_table(inst, T)
    dep = np.full((n, S, K, T1, T1), np.nan)
    dep[:, :, :, 0, :] = 0.0
    cache: dict[tuple[float, ...], float] = {}
    for w in range(n):
        for i in range(S):
            for k in range(K):
                series = demand[w, i, k]
                for t in range(1, T1):
                    for tau in range(1, t + 1):
                        key = tuple(series[t - tau + 1 : t + 1])
                        value = cache.get(key)
                        if value is None:
                            value = cache[key] = dep_from_rates(key, rates)
                        dep[w, i, k, tau, t] = value
    return DeprivationTable(dep)


def expected_dep_coefficients(table: DeprivationTable, probs: Sequence[float]) -> np.ndarray:
    """Probability-weighted streak costs, shape (S, K, T+1, T+1)."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (table.num_scenarios,):
        raise ValueError(f"expected {table.num_scenarios} probabilities, got {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities must be nonnegative and sum to 1 (sum={p.sum()!r})")
    return np.tensordot(p, table.dep, axes=1)


def streak_charges(alpha: Sequence[int], demand: Sequence[float], rates: Sequence[float], start: int = 1) -> list[tuple[int, float]]:
    """Charges implied by a satisfaction pattern.

    ``alpha[t]`` and ``demand[t]`` cover periods ``0..T``; periods before
    ``start`` are treated as satisfied.  Each maximal run of unsatisfied
    periods is charged when it ends: at the first satisfied period after it,
    or at ``T`` when it is still open.  Returns ``(period_charged, cost)``
    pairs.
    """
    T = len(alpha) - 1
    charges = []
    run_start = None
    for t in range(start, T + 1):
        if not alpha[t]:
            if run_start is None:
                run_start = t
        elif run_start is not None:
            charges.append((t, dep_from_rates(demand[run_start:t], rates)))
            run_start = None
    if run_start is not None:
        charges.append((T, dep_from_rates(demand[run_start : T + 1], rates)))
    return charges
