"""Command-line MILP solver wrapping ``highspy``.

    python -m reliefplan.milp.runner MODEL.mps SOLUTION.sol [--gap G] [--time-limit S]

Writes the solution grammar read by the external backend.
"""

from __future__ import annotations

import argparse
import math
import sys

from .solution_file import format_solution


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="reliefplan.milp.runner", description=__doc__.splitlines()[0])
    ap.add_argument("mps")
    ap.add_argument("sol")
    ap.add_argument("--gap", type=float, default=1e-4)
    ap.add_argument("--time-limit", type=float, default=math.inf)
    args = ap.parse_args(argv)
    try:
        import highspy
    except ImportError:
        print("highspy is not installed (pip install highspy)", file=sys.stderr)
        return 3
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.gap)
    if math.isfinite(args.time_limit):
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.mps) == highspy.HighsStatus.kError:
        print(f"cannot read {args.mps}", file=sys.stderr)
        return 2
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    status = {
        S.kOptimal: "optimal",
        S.kInfeasible: "infeasible",
        S.kUnbounded: "unbounded",
        S.kUnboundedOrInfeasible: "infeasible",
        S.kTimeLimit: "time-limit",
    }.get(ms, "feasible")
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2
    names = list(h.getLp().col_names_)
    values = list(h.getSolution().col_value) if has_sol else None
    objective = info.objective_function_value if has_sol else None
    bound = info.mip_dual_bound if h.getLp().integrality_ else None
    if status == "feasible" and not has_sol:
        status = "error"
    with open(args.sol, "w") as fh:
        fh.write(format_solution(names, values, status, objective, bound))
    return 0


if __name__ == "__main__":
    sys.exit(main())
