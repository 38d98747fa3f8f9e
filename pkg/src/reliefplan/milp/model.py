"""Solver-independent mixed-integer linear programs.

A :class:`MilpModel` is built incrementally (``add_var``, ``add_constr``) and
frozen into arrays on demand::

    min  c @ x + c0
    s.t. row_lb <= A @ x <= row_ub
         lb <= x <= ub,  x[j] integral where integrality[j]

Variables and constraints are addressed by position; names are kept for file
export and must be unique.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

INF = math.inf
INT_TOL = 1e-6
FEAS_TOL = 1e-6


class VarType(enum.Enum):
    CONTINUOUS = "C"
    BINARY = "B"
    INTEGER = "I"


class Sense(enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible-with-gap"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time-limit"
    ERROR = "error"


def _sense(s: Sense | str) -> Sense:
    if isinstance(s, Sense):
        return s
    aliases = {"<=": Sense.LE, "L": Sense.LE, "=": Sense.EQ, "==": Sense.EQ, "E": Sense.EQ, ">=": Sense.GE, "G": Sense.GE}
    try:
        return aliases[s]
    except KeyError:
        raise ValueError(f"unknown constraint sense {s!r}") from None


@dataclasses.dataclass(frozen=True)
class ModelArrays:
    c: np.ndarray
    c0: float
    A: sp.csr_matrix
    row_lb: np.ndarray
    row_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray  # bool

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


class MilpModel:
    """Minimization MILP under construction."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.var_types: list[VarType] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: list[float] = []
        self.obj_constant = 0.0
        self.constr_names: list[str] = []
        self.senses: list[Sense] = []
        self._rhs: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._var_index: dict[str, int] = {}
        self._constr_index: dict[str, int] = {}
        self._arrays: ModelArrays | None = None

    # -- construction -----------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, vtype: VarType | str = VarType.CONTINUOUS, obj: float = 0.0) -> int:
        vtype = VarType(vtype) if not isinstance(vtype, VarType) else vtype
        if vtype is VarType.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if name in self._var_index:
            raise ValueError(f"duplicate variable name {name!r}")
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ValueError(f"variable {name!r}: invalid bounds [{lb}, {ub}]")
        j = len(self.var_names)
        self._var_index[name] = j
        self.var_names.append(name)
        self.var_types.append(vtype)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._obj.append(float(obj))
        self._arrays = None
        return j

    def add_constr(self, coefs: Mapping[int, float] | Iterable[tuple[int, float]], sense: Sense | str, rhs: float, name: str | None = None) -> int:
        """Add ``sum(coef * x[j]) <sense> rhs``; repeated indices are summed."""
        sense = _sense(sense)
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        i = len(self.constr_names)
        if name is None:
            name = f"c{i}"
        if name in self._constr_index:
            raise ValueError(f"duplicate constraint name {name!r}")
        n = len(self.var_names)
        for j, v in items:
            if not 0 <= j < n:
                raise IndexError(f"constraint {name!r} references undeclared variable {j}")
            self._rows.append(i)
            self._cols.append(j)
            self._vals.append(float(v))
        if not math.isfinite(rhs):
            raise ValueError(f"constraint {name!r}: right-hand side must be finite")
        self._constr_index[name] = i
        self.constr_names.append(name)
        self.senses.append(sense)
        self._rhs.append(float(rhs))
        self._arrays = None
        return i

    def set_obj(self, j: int, coef: float) -> None:
        self._obj[j] = float(coef)
        self._arrays = None

    def add_obj(self, j: int, coef: float) -> None:
        self._obj[j] += float(coef)
        self._arrays = None

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        if lb > ub:
            raise ValueError(f"variable {self.var_names[j]!r}: invalid bounds [{lb}, {ub}]")
        self._lb[j], self._ub[j] = float(lb), float(ub)
        self._arrays = None

    # -- queries ----------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_constrs(self) -> int:
        return len(self.constr_names)

    @property
    def num_integer(self) -> int:
        return sum(t is not VarType.CONTINUOUS for t in self.var_types)

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    def bounds(self, j: int) -> tuple[float, float]:
        return self._lb[j], self._ub[j]

    @property
    def rhs(self) -> list[float]:
        return list(self._rhs)

    def arrays(self) -> ModelArrays:
        if self._arrays is None:
            m, n = self.num_constrs, self.num_vars
            A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
            A.sum_duplicates()
            rhs = np.array(self._rhs, dtype=float)
            senses = self.senses
            row_lb = np.array([r if s is not Sense.LE else -INF for r, s in zip(rhs, senses)], dtype=float)
            row_ub = np.array([r if s is not Sense.GE else INF for r, s in zip(rhs, senses)], dtype=float)
            self._arrays = ModelArrays(
                c=np.array(self._obj, dtype=float),
                c0=float(self.obj_constant),
                A=A,
                row_lb=row_lb,
                row_ub=row_ub,
                lb=np.array(self._lb, dtype=float),
                ub=np.array(self._ub, dtype=float),
                integrality=np.array([t is not VarType.CONTINUOUS for t in self.var_types], dtype=bool),
            )
        return self._arrays

    def row(self, i: int) -> dict[int, float]:
        A = self.arrays().A
        lo, hi = A.indptr[i], A.indptr[i + 1]
        return dict(zip(A.indices[lo:hi].tolist(), A.data[lo:hi].tolist()))

    def copy(self, name: str | None = None) -> "MilpModel":
        other = MilpModel(self.name if name is None else name)
        for attr in ("var_names", "var_types", "_lb", "_ub", "_obj", "constr_names", "senses", "_rhs", "_rows", "_cols", "_vals"):
            setattr(other, attr, list(getattr(self, attr)))
        other.obj_constant = self.obj_constant
        other._var_index = dict(self._var_index)
        other._constr_index = dict(self._constr_index)
        return other

    def relaxed(self) -> "MilpModel":
        """Copy with every variable continuous (binaries keep their [0, 1] box)."""
        other = self.copy()
        other.var_types = [VarType.CONTINUOUS] * self.num_vars
        return other

    def objective_value(self, x: Sequence[float]) -> float:
        a = self.arrays()
        return float(a.c @ np.asarray(x, dtype=float) + a.c0)

    def __repr__(self) -> str:
        return f"MilpModel({self.name!r}, vars={self.num_vars}, int={self.num_integer}, constrs={self.num_constrs})"


@dataclasses.dataclass
class MilpSolution:
    """Result of a solve.

    ``objective`` and ``values`` refer to the best solution found (``None``
    when there is none).  ``bound`` is a valid lower bound on the optimum and
    ``gap = (objective - bound) / max(|objective|, 1)``.
    """

    status: Status
    objective: float | None = None
    values: np.ndarray | None = None
    bound: float | None = None
    gap: float | None = None
    nodes: int = 0
    branches: int = 0
    iterations: int = 0
    message: str = ""
    max_violation: float | None = None

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    def value(self, j: int) -> float:
        if self.values is None:
            raise ValueError(f"no solution available (status {self.status.value})")
        return float(self.values[j])


def relative_gap(objective: float, bound: float) -> float:
    return max(0.0, (objective - bound) / max(abs(objective), 1.0))


def max_violation(model: MilpModel, x: Sequence[float], check_integrality: bool = True) -> float:
    """Largest absolute violation of bounds, rows and (optionally) integrality."""
    a = model.arrays()
    x = np.asarray(x, dtype=float)
    if x.shape != (model.num_vars,):
        raise ValueError(f"expected {model.num_vars} values, got {x.shape}")
    viol = [0.0]
    viol.append(float(np.max(a.lb - x, initial=0.0)))
    viol.append(float(np.max(x - a.ub, initial=0.0)))
    if a.A.shape[0]:
        ax = a.A @ x
        viol.append(float(np.max(a.row_lb - ax, initial=0.0)))
        viol.append(float(np.max(ax - a.row_ub, initial=0.0)))
    if check_integrality and a.integrality.any():
        xi = x[a.integrality]
        viol.append(float(np.max(np.abs(xi - np.round(xi)), initial=0.0)))
    return max(viol)


def verify(model: MilpModel, sol: MilpSolution, tol: float = FEAS_TOL, check_integrality: bool = True) -> MilpSolution:
    """Re-check ``sol`` against the model; a violated solution becomes an error."""
    if sol.values is None:
        return sol
    v = max_violation(model, sol.values, check_integrality)
    sol.max_violation = v
    if v > tol:
        sol.message = (sol.message + "; " if sol.message else "") + f"solution violates model by {v:.3g}"
        sol.status = Status.ERROR
    return sol
