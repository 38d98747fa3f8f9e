"""In-process HiGHS backend.

Uses ``highspy`` when it is installed (which also accepts a starting
solution) and falls back to :func:`scipy.optimize.milp`, which bundles the
same solver but ignores starts.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import FEAS_TOL, MilpModel, MilpSolution, ModelArrays, Status, max_violation, relative_gap

try:
    import highspy
except ImportError:  # pragma: no cover - exercised only without the extra
    highspy = None

_INF = 1e30


def _clip(v: np.ndarray) -> np.ndarray:
    return np.clip(v, -_INF, _INF)


def _run_highspy(a: ModelArrays, lb, ub, integral: bool, gap_tol, time_limit, start):
    m, n = a.A.shape
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", float(gap_tol))
    if time_limit is not None:
        h.setOptionValue("time_limit", float(time_limit))
    lp = highspy.HighsLp()
    lp.num_col_ = n
    lp.num_row_ = m
    lp.col_cost_ = a.c
    lp.offset_ = a.c0
    lp.col_lower_ = _clip(lb)
    lp.col_upper_ = _clip(ub)
    lp.row_lower_ = _clip(a.row_lb)
    lp.row_upper_ = _clip(a.row_ub)
    A = a.A.tocsc()
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr
    lp.a_matrix_.index_ = A.indices
    lp.a_matrix_.value_ = A.data
    if integral:
        lp.integrality_ = [highspy.HighsVarType.kInteger if f else highspy.HighsVarType.kContinuous for f in a.integrality]
    h.passModel(lp)
    if start is not None and integral:
        sol = highspy.HighsSolution()
        sol.col_value = list(np.asarray(start, dtype=float))
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    info = h.getInfo()
    x = np.array(h.getSolution().col_value, dtype=float) if info.primal_solution_status == 2 else None
    if ms == S.kOptimal:
        status = Status.OPTIMAL
    elif ms in (S.kInfeasible, S.kUnboundedOrInfeasible):
        status = Status.INFEASIBLE
    elif ms == S.kUnbounded:
        status = Status.UNBOUNDED
    elif ms == S.kTimeLimit:
        status = Status.TIME_LIMIT
    else:
        status = Status.FEASIBLE if x is not None else Status.ERROR
    bound = float(info.mip_dual_bound) if integral else None
    nodes = int(info.mip_node_count) if integral else 0
    return status, x, bound, nodes, h.modelStatusToString(ms)


def _run_scipy(a: ModelArrays, lb, ub, integral: bool, gap_tol, time_limit, start):
    options = {"disp": False, "mip_rel_gap": gap_tol}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    cons = LinearConstraint(a.A, a.row_lb, a.row_ub) if a.A.shape[0] else None
    integrality = a.integrality.astype(np.uint8) if integral else np.zeros(a.c.shape[0], dtype=np.uint8)
    res = milp(a.c, integrality=integrality, bounds=Bounds(lb, ub), constraints=cons, options=options)
    status = {0: Status.OPTIMAL, 1: Status.TIME_LIMIT, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(res.status, Status.ERROR)
    x = None if res.x is None else np.asarray(res.x, dtype=float).copy()
    if status is Status.ERROR and x is not None:
        status = Status.FEASIBLE
    bound = getattr(res, "mip_dual_bound", None)
    bound = None if bound is None else float(bound) + a.c0
    return status, x, bound, int(getattr(res, "mip_node_count", 0) or 0), res.message


def _run(a, lb, ub, integral, gap_tol, time_limit, start=None):
    if highspy is not None:
        return _run_highspy(a, lb, ub, integral, gap_tol, time_limit, start)
    return _run_scipy(a, lb, ub, integral, gap_tol, time_limit, start)


def solve_highs(
    model: MilpModel,
    gap_tol: float = 1e-4,
    time_limit: float | None = None,
    start: np.ndarray | None = None,
    relax: bool = False,
) -> MilpSolution:
    """Solve ``model`` (or its LP relaxation with ``relax=True``) with HiGHS."""
    a = model.arrays()
    integral = bool(a.integrality.any()) and not relax
    status, x, bound, nodes, msg = _run(a, a.lb, a.ub, integral, gap_tol, time_limit, start)
    if x is None or status in (Status.INFEASIBLE, Status.UNBOUNDED):
        return MilpSolution(status, message=msg)
    if integral:
        x[a.integrality] = np.round(x[a.integrality])
        if max_violation(model, x) > FEAS_TOL:
            # polish: fix the integers and re-solve the continuous part
            lb, ub = a.lb.copy(), a.ub.copy()
            lb[a.integrality] = ub[a.integrality] = x[a.integrality]
            _, px, _, _, _ = _run(a, lb, ub, False, gap_tol, time_limit)
            if px is not None:
                x = px
                x[a.integrality] = lb[a.integrality]
    obj = float(a.c @ x + a.c0)
    if not integral or bound is None:
        bound = obj
    bound = min(bound, obj)
    return MilpSolution(status, objective=obj, values=x, bound=bound, gap=relative_gap(obj, bound), nodes=nodes, message=msg)
