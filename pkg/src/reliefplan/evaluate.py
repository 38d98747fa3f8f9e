"""Out-of-sample evaluation of the four planning policies and experiment reports.

Every replication resamples the static scenario set and scores all policies
on one common set of evaluation paths.  Static policies are solved once per
replication; rolling policies re-plan along each path.

Report files (``write_report``) are comma-separated with a header row:

``paths.csv``      one row per replication, policy and path with the cost split
``summary.csv``    per replication and policy: means, standard deviations across
                   paths, Dep/Total and Improv_P; ``replication`` = ``all`` rows
                   pool the replications and add the standard deviation of the
                   replication means
``periods.csv``    per policy and period: mean, median and quartiles of the
                   per-path period cost
``roll_gaps.csv``  per replication, rolling policy, path and roll: the MIP gap
``timing.csv``     wall-clock seconds (not reproducible, kept apart)
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance, scale_instance, with_horizon
from .milp import SolverConfig
from .planner.execution import COST_PARTS, PathExecution, PlanningError, evaluate_plan_on_path, run_rolling_horizon, solve_static
from .scenario import ConditionalDists, MarkovSpec, SamplePath, Seed, sample_path, sample_scenario_set, seed_key

POLICIES = ("S_D", "S_2SSP", "RH_D", "RH_2SSP")
STATIC = ("S_D", "S_2SSP")
ROLLING = ("RH_D", "RH_2SSP")

# sub-stream tags under the base seed
STREAM_PATHS = 1
STREAM_STATIC = 2
STREAM_ROLL = 3

SWEEP_AXES = ("demand_supply_multiplier", "deprivation_weight", "horizon_length", "scenario_count")
MEASURES = ("total", "logistics", "deprivation", "air", "penalty")


@dataclasses.dataclass(frozen=True)
class Profile:
    """Frozen experiment settings selectable by name."""

    name: str
    horizon: int
    n_paths: int
    n_static_scen: int
    n_roll_scen: int
    replications: int
    backend: str
    gap_tol: float
    resample_rolls: bool
    time_limit: float | None = None

    def solver_config(self, **overrides) -> SolverConfig:
        cfg = SolverConfig(backend=self.backend, gap_tol=self.gap_tol, time_limit=self.time_limit)
        return dataclasses.replace(cfg, **overrides)


PROFILES = {
    "desk": Profile("desk", 5, 200, 20, 5, 3, "highs", 0.01, resample_rolls=False),
    "paper": Profile("paper", 5, 1000, 100, 10, 10, "external", 1e-4, resample_rolls=True),
}

# per-roll and per-static-solve limits (seconds) used on long horizons
HORIZON_TIME_LIMITS = {15: (15 * 60.0, 24 * 3600.0)}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


@dataclasses.dataclass(frozen=True)
class PathRow:
    replication: int
    policy: str
    path: int
    costs: tuple[float, ...]  # one entry per COST_PARTS
    periods: tuple[float, ...]  # total cost per period 0..T
    roll_gaps: tuple[float, ...] = ()

    def part(self, name: str) -> float:
        return self.costs[COST_PARTS.index(name)]

    @property
    def logistics(self) -> float:
        return sum(self.part(p) for p in ("opening", "handling", "ground", "air"))

    @property
    def total(self) -> float:
        return self.logistics + self.part("penalty") + self.part("deprivation")

    def measure(self, name: str) -> float:
        if name == "total":
            return self.total
        if name == "logistics":
            return self.logistics
        return self.part(name)


@dataclasses.dataclass
class EvaluationReport:
    """Per-path outcomes of every policy plus solve times.

    ``static_times[(r, policy)]`` is the single solve of a static policy in
    replication ``r``; ``rolling_times[(r, policy)]`` is the per-path sum over
    rolls, averaged over paths.
    """

    policies: tuple[str, ...]
    horizon: int
    replications: int
    n_paths: int
    rows: list[PathRow] = dataclasses.field(default_factory=list)
    static_times: dict[tuple[int, str], float] = dataclasses.field(default_factory=dict)
    rolling_times: dict[tuple[int, str], float] = dataclasses.field(default_factory=dict)

    def select(self, policy: str, replication: int | None = None) -> list[PathRow]:
        return [r for r in self.rows if r.policy == policy and (replication is None or r.replication == replication)]

    def values(self, policy: str, measure: str = "total", replication: int | None = None) -> np.ndarray:
        return np.array([r.measure(measure) for r in self.select(policy, replication)])

    def mean(self, policy: str, measure: str = "total", replication: int | None = None) -> float:
        v = self.values(policy, measure, replication)
        return float(v.mean()) if v.size else float("nan")

    def std(self, policy: str, measure: str = "total", replication: int | None = None) -> float:
        """Standard deviation across paths (population)."""
        v = self.values(policy, measure, replication)
        return float(v.std()) if v.size else float("nan")

    def replication_means(self, policy: str, measure: str = "total") -> np.ndarray:
        return np.array([self.mean(policy, measure, r) for r in range(self.replications)])

    def std_replications(self, policy: str, measure: str = "total") -> float:
        """Standard deviation of the replication means (sample, 0 for one replication)."""
        m = self.replication_means(policy, measure)
        return float(m.std(ddof=1)) if m.size > 1 else 0.0

    def dep_ratio(self, policy: str, replication: int | None = None) -> float:
        total = self.mean(policy, "total", replication)
        return self.mean(policy, "deprivation", replication) / total if total else 0.0

    def air_share(self, policy: str, replication: int | None = None) -> float:
        """Air cost as a fraction of logistics cost."""
        log = self.mean(policy, "logistics", replication)
        return self.mean(policy, "air", replication) / log if log else 0.0

    def improvement(self, replication: int | None = None) -> float:
        """``1 - RH_2SSP/S_2SSP`` of the mean totals."""
        s = self.mean("S_2SSP", "total", replication)
        rh = self.mean("RH_2SSP", "total", replication)
        return 1.0 - rh / s if s else 0.0

    def time(self, policy: str, replication: int | None = None) -> float:
        table = self.static_times if policy in STATIC else self.rolling_times
        reps = range(self.replications) if replication is None else [replication]
        v = [table[(r, policy)] for r in reps if (r, policy) in table]
        return float(np.mean(v)) if v else float("nan")


def evaluation_paths(spec: MarkovSpec, dists: ConditionalDists, inst: Instance, n_paths: int, seed: Seed) -> list[SamplePath]:
    """The common evaluation paths; path ``p`` is keyed ``(*seed, 1, p)``."""
    return [sample_path(spec, dists, inst, seed_key(seed, STREAM_PATHS, p)) for p in range(n_paths)]


def _row(r: int, p: int, ex: PathExecution) -> PathRow:
    costs = tuple(float(ex.costs.total_of(name)) for name in COST_PARTS)
    periods = tuple(float(v) for v in ex.costs.per_period_total())
    return PathRow(r, ex.policy, p, costs, periods, tuple(float(g) for g in ex.roll_gaps))


def _rolling_chunk(args) -> list[tuple[int, PathExecution]]:
    inst, spec, dists, paths, n_roll, stochastic, seed, config, pod_bounds = args
    cache: dict = {}
    out = []
    for p, path in paths:
        try:
            ex = run_rolling_horizon(inst, spec, dists, path, n_roll, stochastic, seed, config, pod_bounds=pod_bounds, cache=cache)
        except PlanningError as exc:
            raise PlanningError(f"path {p}: {exc}") from exc
        out.append((p, ex))
    return out


def _run_rolling(inst, spec, dists, paths, n_roll, stochastic, seed, config, pod_bounds, workers) -> list[tuple[int, PathExecution]]:
    """Rolling policy on every path.  Results do not depend on ``workers``;
    each worker keeps its own roll cache, which only affects speed."""
    indexed = list(enumerate(paths))
    if workers <= 1 or len(indexed) < 2:
        return _rolling_chunk((inst, spec, dists, indexed, n_roll, stochastic, seed, config, pod_bounds))
    chunks = [indexed[i::workers] for i in range(workers)]
    jobs = [(inst, spec, dists, c, n_roll, stochastic, seed, config, pod_bounds) for c in chunks if c]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        done = [item for part in pool.map(_rolling_chunk, jobs) for item in part]
    return sorted(done, key=lambda item: item[0])


def out_of_sample(
    policies: Sequence[str],
    inst: Instance,
    spec: MarkovSpec,
    dists: ConditionalDists,
    n_paths: int,
    n_static_scen: int,
    n_roll_scen: int,
    replications: int,
    seed: Seed,
    config: SolverConfig | None = None,
    *,
    resample_rolls: bool = True,
    roll_config: SolverConfig | None = None,
    pod_bounds: str = "capacity",
    workers: int = 1,
    paths: Sequence[SamplePath] | None = None,
    progress=None,
) -> EvaluationReport:
    """Score ``policies`` on common evaluation paths over several replications.

    With ``resample_rolls=False`` the rolling policies use one lookahead seed
    for every replication, so they are run once and their rows repeated;
    only the static scenario sets then differ between replications.
    """
    for name, v in (("n_paths", n_paths), ("n_static_scen", n_static_scen), ("n_roll_scen", n_roll_scen), ("replications", replications)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    unknown = [p for p in policies if p not in POLICIES]
    if unknown:
        raise ValueError(f"unknown policies {unknown}; choose from {POLICIES}")
    config = config or SolverConfig()
    roll_config = roll_config or config
    policies = tuple(p for p in POLICIES if p in policies)
    if paths is None:
        paths = evaluation_paths(spec, dists, inst, n_paths, seed)
    elif len(paths) != n_paths:
        raise ValueError(f"expected {n_paths} paths, got {len(paths)}")
    report = EvaluationReport(policies, inst.horizon, replications, n_paths)
    say = progress or (lambda msg: None)
    shared: dict[str, list[tuple[int, PathExecution]]] = {}

    for r in range(replications):
        if any(p in STATIC for p in policies):
            scen = sample_scenario_set(spec, dists, inst, n_static_scen, seed_key(seed, STREAM_STATIC, r))
        for policy in policies:
            if policy in STATIC:
                try:
                    plan, _, elapsed = solve_static(inst, scen, config, stochastic=policy == "S_2SSP", pod_bounds=pod_bounds)
                except PlanningError as exc:
                    raise PlanningError(f"replication {r}: {exc}") from exc
                report.static_times[(r, policy)] = elapsed
                for p, path in enumerate(paths):
                    try:
                        ex = evaluate_plan_on_path(inst, plan, path, config, policy=policy, pod_bounds=pod_bounds)
                    except PlanningError as exc:
                        raise PlanningError(f"replication {r} path {p}: {exc}") from exc
                    report.rows.append(_row(r, p, ex))
            else:
                stochastic = policy == "RH_2SSP"
                if resample_rolls or policy not in shared:
                    roll_seed = seed_key(seed, STREAM_ROLL, r if resample_rolls else 0)
                    try:
                        done = _run_rolling(inst, spec, dists, paths, n_roll_scen, stochastic, roll_seed, roll_config, pod_bounds, workers)
                    except PlanningError as exc:
                        raise PlanningError(f"replication {r} {exc}") from exc
                    shared[policy] = done
                done = shared[policy]
                report.rows.extend(_row(r, p, ex) for p, ex in done)
                report.rolling_times[(r, policy)] = float(np.mean([ex.solve_time for _, ex in done]))
            say(f"replication {r} {policy}: mean total {report.mean(policy, 'total', r):.2f}")
    return report


# -- files ---------------------------------------------------------------


def _num(v: float) -> str:
    return repr(float(v))


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])


SUMMARY_HEADER = ["replication", "policy", "paths"] + [f"mean_{m}" for m in MEASURES] + [f"std_paths_{m}" for m in MEASURES] + [
    "std_replications_total",
    "dep_total_ratio",
    "air_logistics_ratio",
    "improv_p",
]


def summary_rows(report: EvaluationReport) -> list[list]:
    rows = []
    for rep in [*range(report.replications), None]:
        improv = report.improvement(rep) if {"S_2SSP", "RH_2SSP"} <= set(report.policies) else ""
        for policy in report.policies:
            n = len(report.select(policy, rep))
            row = ["all" if rep is None else rep, policy, n]
            row += [report.mean(policy, m, rep) for m in MEASURES]
            row += [report.std(policy, m, rep) for m in MEASURES]
            row.append(report.std_replications(policy) if rep is None else "")
            row += [report.dep_ratio(policy, rep), report.air_share(policy, rep), improv]
            rows.append(row)
    return rows


def period_rows(report: EvaluationReport) -> list[list]:
    rows = []
    for policy in report.policies:
        sel = report.select(policy)
        if not sel:
            continue
        table = np.array([r.periods for r in sel])
        for t in range(report.horizon + 1):
            col = table[:, t]
            q1, med, q3 = np.quantile(col, [0.25, 0.5, 0.75])
            rows.append([policy, t, float(col.mean()), float(med), float(q1), float(q3), float(col.min()), float(col.max())])
    return rows


def write_report(report: EvaluationReport, out_dir: str | Path) -> list[Path]:
    """Write the report files into ``out_dir``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {name: out / f"{name}.csv" for name in ("paths", "summary", "periods", "roll_gaps", "timing")}
    _write(
        files["paths"],
        ["replication", "policy", "path", *COST_PARTS, "logistics", "total"],
        ([r.replication, r.policy, r.path, *r.costs, r.logistics, r.total] for r in report.rows),
    )
    _write(files["summary"], SUMMARY_HEADER, summary_rows(report))
    _write(files["periods"], ["policy", "period", "mean", "median", "q1", "q3", "min", "max"], period_rows(report))
    _write(
        files["roll_gaps"],
        ["replication", "policy", "path", "roll", "gap"],
        ([r.replication, r.policy, r.path, t, g] for r in report.rows if r.policy in ROLLING for t, g in enumerate(r.roll_gaps)),
    )
    timing = [[r, p, "static_solve", t] for (r, p), t in sorted(report.static_times.items())]
    timing += [[r, p, "rolling_mean_path", t] for (r, p), t in sorted(report.rolling_times.items())]
    _write(files["timing"], ["replication", "policy", "kind", "seconds"], timing)
    return list(files.values())


def read_path_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- stability and sweeps ------------------------------------------------

STATIC_SIZES = (20, 50, 100, 200, 400)
ROLLING_SIZES = (10, 20, 50, 100)


@dataclasses.dataclass(frozen=True)
class StabilityRow:
    size: int
    mean: float
    std_paths: float
    std_replications: float
    time: float


def stability_test(
    mode: str,
    sizes: Sequence[int],
    inst: Instance,
    spec: MarkovSpec,
    dists: ConditionalDists,
    n_paths: int,
    replications: int,
    seed: Seed,
    config: SolverConfig | None = None,
    *,
    other_size: int = 10,
    workers: int = 1,
) -> list[StabilityRow]:
    """Mean/std/time of S_2SSP (``mode='static'``) or RH_2SSP (``'rolling'``) per sample size.

    ``other_size`` is the scenario count of the model type not under test.
    """
    if mode not in ("static", "rolling"):
        raise ValueError(f"mode must be 'static' or 'rolling', got {mode!r}")
    if not sizes:
        raise ValueError("sizes must be nonempty")
    policy = "S_2SSP" if mode == "static" else "RH_2SSP"
    paths = evaluation_paths(spec, dists, inst, n_paths, seed)
    out = []
    for size in sizes:
        n_static, n_roll = (size, other_size) if mode == "static" else (other_size, size)
        rep = out_of_sample([policy], inst, spec, dists, n_paths, n_static, n_roll, replications, seed, config, workers=workers, paths=paths)
        out.append(StabilityRow(int(size), rep.mean(policy), rep.std(policy), rep.std_replications(policy), rep.time(policy)))
    return out


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple[float, ...]
    replications: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {SWEEP_AXES}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))


DEFAULT_SWEEP_VALUES = {
    "demand_supply_multiplier": (0.5, 0.8, 1.0, 1.2, 1.5, 2.0),
    "deprivation_weight": (0.25, 0.5, 1.0, 2.0, 5.0),
    "horizon_length": (5, 10, 15),
    "scenario_count": (20, 50, 100),
}


def sweep_point(cfg: SweepConfig, value: float, inst: Instance, n_static_scen: int, config: SolverConfig) -> tuple[Instance, int, SolverConfig, SolverConfig]:
    """Instance, static scenario count and static/roll solver settings at one axis value."""
    roll_config = config
    if cfg.axis == "demand_supply_multiplier":
        inst = scale_instance(inst, demand_supply_mult=value)
    elif cfg.axis == "deprivation_weight":
        inst = scale_instance(inst, weight_mult=value)
    elif cfg.axis == "horizon_length":
        inst = with_horizon(inst, int(value))
        if int(value) in HORIZON_TIME_LIMITS:
            per_roll, static = HORIZON_TIME_LIMITS[int(value)]
            roll_config = dataclasses.replace(config, time_limit=per_roll)
            config = dataclasses.replace(config, time_limit=static)
    else:
        n_static_scen = int(value)
    return inst, n_static_scen, config, roll_config


def sensitivity_sweep(
    cfg: SweepConfig,
    inst: Instance,
    spec: MarkovSpec,
    dists: ConditionalDists,
    n_paths: int,
    n_static_scen: int,
    n_roll_scen: int,
    config: SolverConfig | None = None,
    *,
    policies: Sequence[str] = POLICIES,
    resample_rolls: bool = True,
    workers: int = 1,
    progress=None,
) -> list[tuple[float, EvaluationReport]]:
    """One evaluation per axis value, all with the same seed."""
    config = config or SolverConfig()
    out = []
    for value in cfg.values:
        point, n_static, static_cfg, roll_cfg = sweep_point(cfg, value, inst, n_static_scen, config)
        rep = out_of_sample(
            policies, point, spec, dists, n_paths, n_static, n_roll_scen, cfg.replications, cfg.seed, static_cfg,
            resample_rolls=resample_rolls, roll_config=roll_cfg, workers=workers, progress=progress,
        )
        out.append((value, rep))
    return out


SWEEP_HEADER = ["value", "policy"] + [f"mean_{m}" for m in MEASURES] + ["dep_total_ratio", "air_logistics_ratio", "improv_p", "max_roll_gap"]


def sweep_rows(cfg: SweepConfig, results: Sequence[tuple[float, EvaluationReport]]) -> list[list]:
    rows = []
    for value, rep in results:
        improv = rep.improvement() if {"S_2SSP", "RH_2SSP"} <= set(rep.policies) else ""
        for policy in rep.policies:
            gaps = [g for r in rep.select(policy) for g in r.roll_gaps]
            row = [float(value), policy] + [rep.mean(policy, m) for m in MEASURES]
            row += [rep.dep_ratio(policy), rep.air_share(policy), improv, max(gaps) if gaps else ""]
            rows.append(row)
    return rows


def write_sweep(cfg: SweepConfig, results: Sequence[tuple[float, EvaluationReport]], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"sweep_{cfg.axis}.csv"
    _write(target, SWEEP_HEADER, sweep_rows(cfg, results))
    return target


def write_stability(mode: str, rows: Sequence[StabilityRow], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"stability_{mode}.csv"
    _write(target, ["size", "mean_total", "std_paths", "std_replications", "seconds"], ([r.size, r.mean, r.std_paths, r.std_replications, r.time] for r in rows))
    return target
