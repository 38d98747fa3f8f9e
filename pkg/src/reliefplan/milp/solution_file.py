"""Solution-file grammar shared by the external backend and its runner.

::

    # comment
    status optimal            (optional: optimal | feasible | time-limit | infeasible | unbounded | error)
    objective 12.5            (optional)
    bound 12.0                (optional)
    x_1 3
    x_2 0.5

One ``<name> <value>`` pair per line.  Blank lines, comments and lines that
are not a name/number pair are ignored; variables that are not listed are
read as 0.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

KEYWORDS = {"status", "objective", "bound", "gap", "nodes", "iterations", "time"}

STATUS_WORDS = {
    "optimal": "optimal",
    "feasible": "feasible-with-gap",
    "feasible-with-gap": "feasible-with-gap",
    "time-limit": "time-limit",
    "timelimit": "time-limit",
    "infeasible": "infeasible",
    "unbounded": "unbounded",
    "error": "error",
}


@dataclasses.dataclass
class SolutionFile:
    status: str | None = None
    objective: float | None = None
    bound: float | None = None
    values: dict[str, float] = dataclasses.field(default_factory=dict)
    ignored: int = 0


def _number(tok: str) -> float | None:
    try:
        v = float(tok)
    except ValueError:
        return None
    return v if not math.isnan(v) else None


def parse_solution_text(text: str) -> SolutionFile:
    out = SolutionFile()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) != 2:
            out.ignored += 1
            continue
        key, val = tok
        low = key.lower()
        if low == "status":
            word = STATUS_WORDS.get(val.lower())
            if word is None:
                out.ignored += 1
            else:
                out.status = word
            continue
        num = _number(val)
        if num is None:
            out.ignored += 1
            continue
        if low == "objective":
            out.objective = num
        elif low == "bound":
            out.bound = num
        elif low in KEYWORDS:
            pass
        else:
            out.values[key] = num
    return out


def read_solution(path: str | Path) -> SolutionFile:
    return parse_solution_text(Path(path).read_text())


def format_solution(names: list[str], values, status: str | None = None, objective: float | None = None, bound: float | None = None) -> str:
    lines = []
    if status is not None:
        lines.append(f"status {status}")
    if objective is not None:
        lines.append(f"objective {float(objective)!r}")
    if bound is not None and math.isfinite(bound):
        lines.append(f"bound {float(bound)!r}")
    if values is not None:
        lines.extend(f"{n} {float(v)!r}" for n, v in zip(names, values))
    return "\n".join(lines) + "\n"
