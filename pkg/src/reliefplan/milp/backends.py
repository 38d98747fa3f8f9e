"""Backend selection.  Every solution is re-checked against the model."""

from __future__ import annotations

import dataclasses

import numpy as np

from .bnb import solve_bnb
from .external import solve_external
from .highs import solve_highs
from .model import MilpModel, MilpSolution, verify
from .simplex import solve_lp

BACKENDS = ("bundled", "highs", "external")


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    backend: str = "bundled"
    gap_tol: float = 1e-4
    time_limit: float | None = None
    solver_cmd: str | None = None

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.gap_tol < 0:
            raise ValueError("gap tolerance must be nonnegative")


def solve(
    model: MilpModel,
    config: SolverConfig | None = None,
    *,
    start: np.ndarray | None = None,
    relax: bool = False,
    **overrides,
) -> MilpSolution:
    """Solve with the configured backend.

    ``start`` is a feasible point offered as a first incumbent (the external
    backend ignores it).  ``relax=True`` solves the LP relaxation instead.
    """
    cfg = dataclasses.replace(config or SolverConfig(), **overrides)
    if relax:
        if cfg.backend == "bundled":
            sol = solve_lp(model)
        elif cfg.backend == "highs":
            sol = solve_highs(model, gap_tol=cfg.gap_tol, time_limit=cfg.time_limit, relax=True)
        else:
            sol = solve_external(model.relaxed(), cfg.solver_cmd, gap_tol=cfg.gap_tol, time_limit=cfg.time_limit)
        return verify(model, sol, check_integrality=False)
    if cfg.backend == "bundled":
        sol = solve_bnb(model, gap_tol=cfg.gap_tol, time_limit=cfg.time_limit, start=start)
    elif cfg.backend == "highs":
        sol = solve_highs(model, gap_tol=cfg.gap_tol, time_limit=cfg.time_limit, start=start)
    else:
        sol = solve_external(model, cfg.solver_cmd, gap_tol=cfg.gap_tol, time_limit=cfg.time_limit)
    return verify(model, sol)
