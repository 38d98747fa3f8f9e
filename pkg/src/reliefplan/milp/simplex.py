"""Bounded dual simplex for small and medium LPs.

The LP ``min c@x, row_lb <= A@x <= row_ub, lb <= x <= ub`` is put in the
computational form ``[A, -I] @ (x, s) = 0`` with one logical ``s_i`` per row
carrying the row bounds.  The basis is held as a sparse LU factorization
plus a product-form eta file, refactored every ``REFACTOR_EVERY`` pivots.

Every column is boxed: an infinite bound is replaced by an artificial bound
of ``big`` (1e7 to start).  With all columns boxed, any basis can be made dual
feasible by moving nonbasic columns to the appropriate bound, so the dual
simplex needs no phase one and warm starts after bound changes are free.  A
solution resting on an artificial bound triggers a re-solve with a larger box;
if it keeps resting there the LP is declared unbounded.

Leaving row: largest primal infeasibility.  Entering column: Harris two-pass
ratio test, preferring the largest pivot among near-ties, lowest index on
exact ties.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import MilpModel, MilpSolution, ModelArrays, Status

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64
BIG_START = 1e7
BIG_MAX = 1e11


@dataclasses.dataclass
class Basis:
    """Simplex basis over the ``n + m`` columns (structurals then logicals)."""

    basic: np.ndarray  # (m,) column indices
    at_upper: np.ndarray  # (n + m,) bool, meaningful for nonbasic columns

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.at_upper.copy())


@dataclasses.dataclass
class LPResult:
    status: Status
    x: np.ndarray | None = None
    objective: float | None = None
    basis: Basis | None = None
    iterations: int = 0
    duals: np.ndarray | None = None
    message: str = ""


class DualSimplex:
    """Reusable solver for one constraint matrix; bounds may change per call."""

    def __init__(self, c: np.ndarray, A: sp.spmatrix, row_lb: np.ndarray, row_ub: np.ndarray, c0: float = 0.0):
        A = sp.csc_matrix(A, dtype=float)
        self.m, self.n = A.shape
        self.A = A
        self.At = sp.csr_matrix(A.T)
        self.c = np.asarray(c, dtype=float)
        self.c0 = float(c0)
        self.row_lb = np.asarray(row_lb, dtype=float)
        self.row_ub = np.asarray(row_ub, dtype=float)
        self.cost = np.concatenate([self.c, np.zeros(self.m)])
        self.M = sp.hstack([A, -sp.identity(self.m, format="csc")], format="csc")

    @classmethod
    def from_arrays(cls, a: ModelArrays) -> "DualSimplex":
        return cls(a.c, a.A, a.row_lb, a.row_ub, a.c0)

    # -- linear algebra helpers -------------------------------------------

    def _column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.M.indptr[j], self.M.indptr[j + 1]
        return self.M.indices[lo:hi], self.M.data[lo:hi]

    def _ftran_vec(self, v: np.ndarray) -> np.ndarray:
        y = self.lu.solve(v)
        for r, w in self.etas:
            yr = y[r] / w[r]
            y -= yr * w
            y[r] = yr
        return y

    def _btran_vec(self, v: np.ndarray) -> np.ndarray:
        u = v.copy()
        for r, w in reversed(self.etas):
            u[r] = u[r] - (u @ w - u[r]) / w[r]
        return self.lu.solve(u, trans="T")

    def _ftran(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        idx, val = self._column(j)
        v[idx] = val
        return self._ftran_vec(v)

    def _refactor(self) -> None:
        B = self.M[:, self.basic].tocsc()
        try:
            self.lu = spla.splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(str(exc)) from None
        self.etas: list[tuple[int, np.ndarray]] = []
        self.since_refactor = 0

    def _recompute(self) -> None:
        x = self.x
        x[self.basic] = 0.0
        v = self.A @ x[: self.n] - x[self.n :]
        x[self.basic] = -self._ftran_vec(v)
        y = self._btran_vec(self.cost[self.basic])
        self.y = y
        d = np.empty(self.n + self.m)
        d[: self.n] = self.c - self.At @ y
        d[self.n :] = y
        d[self.basic] = 0.0
        self.d = d

    def _place_nonbasic(self) -> bool:
        """Move nonbasic columns to the bound matching their reduced cost; True if any moved."""
        nb = self.nonbasic_mask()
        free = nb & (self.wl < self.wu)
        want_upper = free & (self.d < -DUAL_TOL)
        want_lower = free & (self.d > DUAL_TOL)
        flip = (want_upper & ~self.at_upper) | (want_lower & self.at_upper)
        if not flip.any():
            return False
        self.at_upper[flip] = ~self.at_upper[flip]
        self._set_nonbasic_values()
        return True

    def _set_nonbasic_values(self) -> None:
        nb = self.nonbasic_mask()
        self.x[nb] = np.where(self.at_upper[nb], self.wu[nb], self.wl[nb])

    def nonbasic_mask(self) -> np.ndarray:
        mask = np.ones(self.n + self.m, dtype=bool)
        mask[self.basic] = False
        return mask

    # -- main entry --------------------------------------------------------

    def solve(self, lb: np.ndarray, ub: np.ndarray, basis: Basis | None = None, max_iter: int | None = None) -> LPResult:
        n, m = self.n, self.m
        self.true_l = np.concatenate([np.asarray(lb, dtype=float), self.row_lb])
        self.true_u = np.concatenate([np.asarray(ub, dtype=float), self.row_ub])
        if np.any(self.true_l > self.true_u):
            return LPResult(Status.INFEASIBLE, message="crossed bounds")
        if max_iter is None:
            max_iter = 50 * (n + m) + 1000
        if basis is None:
            self.basic = np.arange(n, n + m)
            self.at_upper = np.zeros(n + m, dtype=bool)
        else:
            self.basic = basis.basic.copy()
            self.at_upper = basis.at_upper.copy()
        total_iter = 0
        big = BIG_START
        while True:
            self.wl = np.where(np.isfinite(self.true_l), self.true_l, -big)
            self.wu = np.where(np.isfinite(self.true_u), self.true_u, big)
            self.x = np.zeros(n + m)
            try:
                status, iters = self._iterate(max_iter - total_iter)
            except np.linalg.LinAlgError as exc:
                return LPResult(Status.ERROR, iterations=total_iter, message=f"singular basis: {exc}")
            total_iter += iters
            if status is not Status.OPTIMAL:
                return LPResult(status, iterations=total_iter, message="" if status is Status.INFEASIBLE else "iteration limit")
            on_artificial = (~np.isfinite(self.true_l) & (self.x <= -0.5 * big)) | (~np.isfinite(self.true_u) & (self.x >= 0.5 * big))
            if not on_artificial.any():
                break
            if big >= BIG_MAX:
                return LPResult(Status.UNBOUNDED, iterations=total_iter)
            big *= 100.0
        x = self.x[:n].copy()
        return LPResult(
            Status.OPTIMAL,
            x=x,
            objective=float(self.c @ x + self.c0),
            basis=Basis(self.basic.copy(), self.at_upper.copy()),
            iterations=total_iter,
            duals=self.y.copy(),
        )

    def _iterate(self, max_iter: int) -> tuple[Status, int]:
        n, m = self.n, self.m
        self._refactor()
        self._set_nonbasic_values()
        self._recompute()
        if self._place_nonbasic():
            self._recompute()
        it = 0
        fresh = True  # values were just recomputed from a new inversion
        while True:
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()
                self._recompute()
                if self._place_nonbasic():
                    self._recompute()
                fresh = True
            xb = self.x[self.basic]
            lo = self.wl[self.basic] - xb
            hi = xb - self.wu[self.basic]
            infeas = np.maximum(lo, hi)
            r = int(np.argmax(infeas))
            if infeas[r] <= PRIMAL_TOL:
                if fresh:
                    return Status.OPTIMAL, it
                self._refactor()
                self._recompute()
                if self._place_nonbasic():
                    self._recompute()
                fresh = True
                continue
            if it >= max_iter:
                return Status.ERROR, it
            p = int(self.basic[r])
            to_upper = hi[r] > lo[r]
            sgn = 1.0 if to_upper else -1.0

            e = np.zeros(m)
            e[r] = 1.0
            rho = self._btran_vec(e)
            alpha = np.empty(n + m)
            alpha[:n] = self.At @ rho
            alpha[n:] = -rho
            abar = sgn * alpha
            nb = self.nonbasic_mask() & (self.wl < self.wu)
            cand = nb & np.where(self.at_upper, abar < -PIVOT_TOL, abar > PIVOT_TOL)
            if not cand.any():
                if fresh:
                    return Status.INFEASIBLE, it
                self._refactor()
                self._recompute()
                self._place_nonbasic()
                self._recompute()
                fresh = True
                continue
            idx = np.flatnonzero(cand)
            side = np.where(self.at_upper[idx], -1.0, 1.0)
            dj = side * self.d[idx]  # >= 0 when dual feasible
            aj = np.abs(abar[idx])
            theta_max = np.min((dj + DUAL_TOL) / aj)
            ok = dj / aj <= theta_max
            k = int(np.argmax(np.where(ok, aj, -1.0)))
            q = int(idx[k])
            theta_d = max(dj[k], 0.0) / aj[k]

            w = self._ftran(q)
            if abs(w[r]) < PIVOT_TOL or abs(w[r] - alpha[q]) > 1e-7 * max(1.0, abs(w[r])):
                if fresh:
                    return Status.ERROR, it
                self._refactor()
                self._recompute()
                self._place_nonbasic()
                self._recompute()
                fresh = True
                continue

            # dual update
            self.d -= theta_d * abar
            self.d[self.basic] = 0.0
            self.d[q] = 0.0
            self.d[p] = -sgn * theta_d
            # primal update
            target = self.wu[p] if to_upper else self.wl[p]
            delta = (self.x[p] - target) / w[r]
            self.x[self.basic] -= delta * w
            self.x[q] += delta
            self.x[p] = target
            self.at_upper[p] = to_upper
            self.basic[r] = q
            self.etas.append((r, w))
            self.since_refactor += 1
            it += 1
            fresh = False


def solve_lp_arrays(a: ModelArrays, lb: np.ndarray | None = None, ub: np.ndarray | None = None, basis: Basis | None = None) -> LPResult:
    solver = DualSimplex.from_arrays(a)
    return solver.solve(a.lb if lb is None else lb, a.ub if ub is None else ub, basis)


def lp_residual(a: ModelArrays, x: np.ndarray) -> float:
    """Largest violation of row and column bounds."""
    ax = a.A @ x
    parts = [a.lb - x, x - a.ub, a.row_lb - ax, ax - a.row_ub]
    return max(0.0, *(float(np.max(p, initial=0.0)) for p in parts))


def solve_lp(model: MilpModel) -> MilpSolution:
    """Solve the LP relaxation of ``model`` (integrality dropped)."""
    a = model.arrays()
    res = solve_lp_arrays(a)
    if res.status is not Status.OPTIMAL:
        return MilpSolution(res.status, iterations=res.iterations, message=res.message)
    viol = lp_residual(a, res.x)
    sol = MilpSolution(
        Status.OPTIMAL,
        objective=res.objective,
        values=res.x,
        bound=res.objective,
        gap=0.0,
        iterations=res.iterations,
        max_violation=viol,
    )
    if viol > 1e-7:
        sol.status = Status.ERROR
        sol.message = f"residual {viol:.3g} above tolerance"
    return sol


def is_integral(x: np.ndarray, mask: np.ndarray, tol: float) -> bool:
    xi = x[mask]
    return bool(np.all(np.abs(xi - np.round(xi)) <= tol))


