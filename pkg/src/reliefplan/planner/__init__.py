"""Planning models, the rounding start heuristic and policy execution."""

from .builder import POD_BOUNDS, InitialState, PlanModel, VarMap, build_deterministic, build_model, build_static_2ssp, mean_scenario
from .execution import (
    COST_PARTS,
    CostBreakdown,
    FirstStagePlan,
    PathExecution,
    PlanningError,
    RollDecision,
    RollState,
    evaluate_first_stage_on_path,
    evaluate_plan_on_path,
    extract_plan,
    fix_plan,
    lookahead_scenarios,
    roll_step,
    run_rolling_horizon,
    solve_plan,
    solve_static,
)
from .heuristic import rounding_start
