"""Independent reference computations used as test oracles.

Nothing here imports the package's own algorithms; each function is a
direct, slow restatement of a definition.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def lam(t: int, delta: float = 30.0, weight: float = 1.0) -> float:
    return weight * delta * (math.exp(1.5 + 0.12 * t) - math.exp(1.5))


def layer_dep(amounts, rate) -> float:
    """Deprivation by horizontal layers.

    Between consecutive distinct positive values ``v[j-1] < v[j]`` the list
    is cut at height ``v[j]``; each maximal run of entries reaching that
    height pays ``(v[j] - v[j-1]) * rate(run length)``.
    """
    values = sorted({a for a in amounts if a > 0})
    total, below = 0.0, 0.0
    for v in values:
        run = 0
        for a in list(amounts) + [0.0]:
            if a >= v:
                run += 1
            elif run:
                total += (v - below) * rate(run)
                run = 0
        below = v
    return total


def streaks(alpha) -> list[int]:
    """``U_t = (1 - a_t)(U_{t-1} + 1)`` with ``U_0 = 0``."""
    u = [0]
    for a in alpha[1:]:
        u.append(0 if a else u[-1] + 1)
    return u


def pattern_charges(alpha, demand, rate) -> float:
    """Total deprivation of a satisfaction pattern, each run charged once."""
    T = len(alpha) - 1
    total, start = 0.0, None
    for t in range(1, T + 2):
        unmet = t <= T and not alpha[t]
        if unmet and start is None:
            start = t
        elif not unmet and start is not None:
            total += layer_dep(demand[start:t], rate)
            start = None
    return total


def enumerate_milp(c, A_ub, b_ub, binaries, bounds):
    """Optimum of ``min c x, A_ub x <= b_ub`` by enumerating the binaries.

    Each 0/1 assignment of the ``binaries`` columns fixes them by bounds and
    the remaining continuous LP is solved with scipy's ``linprog``.
    Returns ``(objective, x)`` or ``(inf, None)`` when infeasible.
    """
    best, arg = math.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        bnds = list(bounds)
        for j, b in zip(binaries, bits):
            bnds[j] = (b, b)
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bnds, method="highs")
        if res.status == 0 and res.fun < best - 1e-12:
            best, arg = float(res.fun), np.asarray(res.x)
    return best, arg


def box_lp_vertices(c, A_ub, b_ub, lo, hi):
    """Optimum of a boxed LP by checking every basic solution (tiny sizes only)."""
    n = len(c)
    # stack all constraints as rows G x <= h (box included)
    G = np.vstack([A_ub, np.eye(n), -np.eye(n)])
    h = np.concatenate([b_ub, hi, -lo])
    best = math.inf
    for rows in itertools.combinations(range(G.shape[0]), n):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, h[list(rows)])
        if np.all(G @ x <= h + 1e-8):
            best = min(best, float(c @ x))
    return best
