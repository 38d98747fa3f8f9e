"""Bridge to an external MILP solver through MPS and solution files.

The command template is a shell-style string with placeholders ``{mps}``,
``{sol}``, ``{gap}`` and ``{time_limit}``; it is split with :mod:`shlex` and
run without a shell.  The solver must write the solution grammar of
:mod:`.solution_file` to ``{sol}``.  The environment variable
``RELIEFPLAN_SOLVER_CMD`` replaces the default template, which runs the
HiGHS-based :mod:`.runner` shipped with this package.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from .model import MilpModel, MilpSolution, Status, relative_gap
from .mps import write_mps
from .solution_file import read_solution

ENV_VAR = "RELIEFPLAN_SOLVER_CMD"
DEFAULT_TEMPLATE = f"{shlex.quote(sys.executable)} -m reliefplan.milp.runner {{mps}} {{sol}} --gap {{gap}} --time-limit {{time_limit}}"
# extra wall time granted to the subprocess beyond its own limit
GRACE_SECONDS = 30.0


class SolverError(RuntimeError):
    """External solver failed, produced unreadable output or unknown names."""


def default_command() -> str:
    return os.environ.get(ENV_VAR) or DEFAULT_TEMPLATE


def _argv(template: str, mps: Path, sol: Path, gap: float, time_limit: float | None) -> list[str]:
    fields = {"mps": str(mps), "sol": str(sol), "gap": repr(float(gap)), "time_limit": "inf" if time_limit is None else repr(float(time_limit))}
    try:
        return [tok.format(**fields) for tok in shlex.split(template)]
    except (KeyError, IndexError, ValueError) as exc:
        raise SolverError(f"bad solver command template {template!r}: {exc}") from None


def solve_external(
    model: MilpModel,
    solver_cmd: str | None = None,
    gap_tol: float = 1e-4,
    time_limit: float | None = None,
    workdir: str | Path | None = None,
) -> MilpSolution:
    template = solver_cmd or default_command()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        mps = Path(tmp) / "model.mps"
        sol = Path(tmp) / "model.sol"
        names = write_mps(model, mps)
        argv = _argv(template, mps, sol, gap_tol, time_limit)
        timeout = None if time_limit is None else time_limit + GRACE_SECONDS
        timed_out = False
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            timed_out = True
            proc = None
        except OSError as exc:
            raise SolverError(f"cannot run solver {argv[0]!r}: {exc}") from None
        if proc is not None and proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-5:]
            raise SolverError(f"solver exited with status {proc.returncode}: {' | '.join(tail)}")
        if not sol.exists():
            if timed_out:
                return MilpSolution(Status.TIME_LIMIT, message="solver timed out without a solution file")
            raise SolverError("solver produced no solution file")
        parsed = read_solution(sol)

    unknown = sorted(set(parsed.values) - set(names.var_lookup))
    if unknown:
        shown = ", ".join(unknown[:5])
        raise SolverError(f"solution names not in the model: {shown}" + (" ..." if len(unknown) > 5 else ""))
    status = Status(parsed.status) if parsed.status else None
    if timed_out:
        status = Status.TIME_LIMIT
    if status in (Status.INFEASIBLE, Status.UNBOUNDED, Status.ERROR):
        return MilpSolution(status)
    if not parsed.values and parsed.objective is None:
        if status is Status.TIME_LIMIT:
            return MilpSolution(Status.TIME_LIMIT, message="no incumbent")
        raise SolverError("solution file holds neither values nor an objective")
    x = np.zeros(model.num_vars)
    for name, v in parsed.values.items():
        x[names.var_lookup[name]] = v
    a = model.arrays()
    if a.integrality.any():
        x[a.integrality] = np.round(x[a.integrality])
    obj = float(a.c @ x + a.c0)
    if parsed.objective is not None and abs(parsed.objective - obj) > 1e-6 * max(1.0, abs(obj)):
        msg = f"reported objective {parsed.objective!r} differs from recomputed {obj!r}"
    else:
        msg = ""
    bound = parsed.bound if parsed.bound is not None and math.isfinite(parsed.bound) else None
    if bound is None and status in (None, Status.OPTIMAL):
        bound = obj
    gap = None if bound is None else relative_gap(obj, min(bound, obj))
    return MilpSolution(status or Status.OPTIMAL, objective=obj, values=x, bound=None if bound is None else min(bound, obj), gap=gap, message=msg)
