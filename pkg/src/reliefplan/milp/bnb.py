"""Best-first branch-and-bound over dual simplex relaxations.

Rules (fixed, so runs are reproducible):

* node order: smallest LP bound first, ties by creation order;
* branching variable: most fractional integer variable, lowest index on ties;
* both children are solved as soon as they are created, warm started from the
  parent's optimal basis;
* before the best-first search a depth-first dive (rounding toward the
  nearer child) looks for an early incumbent, unless a feasible start was
  supplied;
* every integral LP point is polished by fixing the integer variables at
  their rounded values and re-solving the LP, then checked against the model.

The search stops when ``(incumbent - bound) / max(|incumbent|, 1) <= gap_tol``,
the open list empties, or the time or node limit is reached.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
import time

import numpy as np

from .model import FEAS_TOL, INT_TOL, MilpModel, MilpSolution, Status, max_violation, relative_gap
from .simplex import Basis, DualSimplex, LPResult


@dataclasses.dataclass
class _Node:
    lb: np.ndarray
    ub: np.ndarray
    lp: LPResult
    depth: int


def _most_fractional(x: np.ndarray, int_idx: np.ndarray, tol: float) -> int | None:
    if int_idx.size == 0:
        return None
    frac = np.abs(x[int_idx] - np.round(x[int_idx]))
    score = np.minimum(x[int_idx] - np.floor(x[int_idx]), np.ceil(x[int_idx]) - x[int_idx])
    score = np.where(frac > tol, score, -1.0)
    k = int(np.argmax(score))  # first maximum: lowest index on ties
    return None if score[k] < 0 else int(int_idx[k])


class _Search:
    def __init__(self, model: MilpModel, gap_tol: float, time_limit: float | None, node_limit: int | None, int_tol: float):
        self.model = model
        self.a = model.arrays()
        self.lp = DualSimplex.from_arrays(self.a)
        self.int_idx = np.flatnonzero(self.a.integrality)
        self.gap_tol = gap_tol
        self.int_tol = int_tol
        self.deadline = None if time_limit is None else time.monotonic() + time_limit
        self.node_limit = node_limit
        self.inc_obj = math.inf
        self.inc_x: np.ndarray | None = None
        self.nodes = 0
        self.branches = 0
        self.iterations = 0

    def out_of_time(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline

    def relax(self, lb: np.ndarray, ub: np.ndarray, basis: Basis | None) -> LPResult:
        res = self.lp.solve(lb, ub, basis)
        self.iterations += res.iterations
        self.nodes += 1
        if res.status is Status.ERROR and basis is not None:
            # numerical trouble from the warm start: retry cold
            res = self.lp.solve(lb, ub, None)
            self.iterations += res.iterations
        return res

    def prune_level(self) -> float:
        if self.inc_x is None:
            return math.inf
        return self.inc_obj - max(self.gap_tol * max(abs(self.inc_obj), 1.0), 1e-9)

    def try_incumbent(self, node_lb: np.ndarray, node_ub: np.ndarray, res: LPResult) -> None:
        x = res.x
        lb, ub = node_lb.copy(), node_ub.copy()
        xi = np.round(x[self.int_idx])
        lb[self.int_idx] = ub[self.int_idx] = xi
        polished = self.lp.solve(lb, ub, res.basis)
        self.iterations += polished.iterations
        if polished.status is not Status.OPTIMAL:
            return
        cand = polished.x.copy()
        cand[self.int_idx] = xi
        if max_violation(self.model, cand) > FEAS_TOL:
            return
        obj = float(self.a.c @ cand + self.a.c0)
        if obj < self.inc_obj:
            self.inc_obj, self.inc_x = obj, cand

    def children(self, node: _Node, j: int) -> list[_Node]:
        v = node.lp.x[j]
        out = []
        for side in ("down", "up"):
            lb, ub = node.lb.copy(), node.ub.copy()
            if side == "down":
                ub[j] = math.floor(v)
            else:
                lb[j] = math.ceil(v)
            out.append((side, lb, ub))
        self.branches += 1
        result = []
        for side, lb, ub in out:
            res = self.relax(lb, ub, node.lp.basis)
            result.append((side, _Node(lb, ub, res, node.depth + 1)))
        return result

    def dive(self, root: _Node) -> None:
        node = root
        while not self.out_of_time():
            j = _most_fractional(node.lp.x, self.int_idx, self.int_tol)
            if j is None:
                self.try_incumbent(node.lb, node.ub, node.lp)
                return
            v = node.lp.x[j]
            lb, ub = node.lb.copy(), node.ub.copy()
            if v - math.floor(v) < 0.5:
                ub[j] = math.floor(v)
            else:
                lb[j] = math.ceil(v)
            res = self.relax(lb, ub, node.lp.basis)
            if res.status is not Status.OPTIMAL or res.objective >= self.prune_level():
                return
            node = _Node(lb, ub, res, node.depth + 1)


def solve_bnb(
    model: MilpModel,
    gap_tol: float = 1e-6,
    time_limit: float | None = None,
    node_limit: int | None = None,
    int_tol: float = INT_TOL,
    dive: bool = True,
    start: np.ndarray | None = None,
) -> MilpSolution:
    """Solve ``model`` to within ``gap_tol`` relative gap.

    ``start`` is an optional feasible point used as the first incumbent; it
    is ignored if it violates the model.
    """
    s = _Search(model, gap_tol, time_limit, node_limit, int_tol)
    a = s.a
    if start is not None:
        start = np.asarray(start, dtype=float)
        if start.shape == (model.num_vars,) and max_violation(model, start) <= FEAS_TOL:
            s.inc_obj, s.inc_x = float(a.c @ start + a.c0), start.copy()
    root_res = s.relax(a.lb.copy(), a.ub.copy(), None)
    if root_res.status is not Status.OPTIMAL:
        return MilpSolution(root_res.status, nodes=s.nodes, iterations=s.iterations, message=root_res.message or "root relaxation")
    root = _Node(a.lb.copy(), a.ub.copy(), root_res, 0)
    if dive and s.int_idx.size and s.inc_x is None:
        s.dive(root)

    heap: list[tuple[float, int, _Node]] = []
    seq = 0
    heapq.heappush(heap, (root_res.objective, seq, root))
    stop_reason = None
    while heap:
        bound = min(heap[0][0], s.inc_obj)
        if s.inc_x is not None and relative_gap(s.inc_obj, bound) <= gap_tol:
            break
        if s.out_of_time():
            stop_reason = Status.TIME_LIMIT
            break
        if node_limit is not None and s.nodes >= node_limit:
            stop_reason = Status.FEASIBLE
            break
        obj, _, node = heapq.heappop(heap)
        if obj >= s.prune_level():
            continue
        j = _most_fractional(node.lp.x, s.int_idx, int_tol)
        if j is None:
            s.try_incumbent(node.lb, node.ub, node.lp)
            continue
        for _, child in s.children(node, j):
            res = child.lp
            if res.status is Status.INFEASIBLE:
                continue
            if res.status is not Status.OPTIMAL:
                return MilpSolution(
                    Status.ERROR,
                    objective=None if s.inc_x is None else s.inc_obj,
                    values=s.inc_x,
                    nodes=s.nodes,
                    branches=s.branches,
                    iterations=s.iterations,
                    message=f"relaxation failed at depth {child.depth}: {res.status.value} {res.message}",
                )
            if res.objective >= s.prune_level():
                continue
            if _most_fractional(res.x, s.int_idx, int_tol) is None:
                s.try_incumbent(child.lb, child.ub, res)
                continue
            seq += 1
            heapq.heappush(heap, (res.objective, seq, child))

    open_bound = heap[0][0] if heap else math.inf
    if s.inc_x is None:
        if stop_reason is None:
            return MilpSolution(Status.INFEASIBLE, nodes=s.nodes, branches=s.branches, iterations=s.iterations)
        return MilpSolution(stop_reason, bound=open_bound, nodes=s.nodes, branches=s.branches, iterations=s.iterations, message="no incumbent")
    bound = min(open_bound, s.inc_obj)
    gap = relative_gap(s.inc_obj, bound)
    status = Status.OPTIMAL if gap <= gap_tol else (stop_reason or Status.FEASIBLE)
    sol = MilpSolution(
        status,
        objective=s.inc_obj,
        values=s.inc_x,
        bound=bound,
        gap=gap,
        nodes=s.nodes,
        branches=s.branches,
        iterations=s.iterations,
    )
    sol.max_violation = max_violation(model, s.inc_x)
    return sol
