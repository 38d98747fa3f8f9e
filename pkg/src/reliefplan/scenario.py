"""Two-layer uncertainty model: Markov damage states driving demand and supply.

Layer one is a Markov chain over network damage levels.  Layer two draws, for
each period and given that period's state, a supply-limit multiplier per item
and a demand multiplier per POD and item.  Demand multipliers are picked in
two steps: a bracket (an interval of width 0.10) from the state's bracket
distribution, then a uniform value inside it.

Random streams
--------------
Every draw comes from a Philox counter-based generator keyed by
``SeedSequence([*seed, period, layer])``, where ``seed`` is a tuple of
nonnegative integers identifying the path (for example
``(base_seed, replication, path_index)``) and ``layer`` is one of
:data:`LAYER_MARKOV`, :data:`LAYER_SUPPLY`, :data:`LAYER_DEMAND`.  Streams
never overlap, so a path depends only on its key and never on the order in
which paths are generated, and changing the supply table leaves demand draws
untouched.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .instance import Instance

LAYER_MARKOV = 0
LAYER_SUPPLY = 1
LAYER_DEMAND = 2

PROB_TOL = 1e-9

Seed = Union[int, Sequence[int]]


def seed_key(seed: Seed, *extra: int) -> tuple[int, ...]:
    base = (int(seed),) if np.isscalar(seed) else tuple(int(s) for s in seed)
    key = base + tuple(int(e) for e in extra)
    if any(k < 0 for k in key):
        raise ValueError(f"seed components must be nonnegative: {key}")
    return key


def stream(seed: Seed, *extra: int) -> np.random.Generator:
    """Independent Philox generator for the key ``(*seed, *extra)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(seed_key(seed, *extra)))))


def _check_dist(p: np.ndarray, what: str) -> None:
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError(f"{what}: probabilities must lie in [0, 1]")
    sums = p.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise ValueError(f"{what}: probabilities must sum to 1, got {sums}")


@dataclasses.dataclass(frozen=True, eq=False)
class MarkovSpec:
    states: tuple[str, ...]
    initial_dist: np.ndarray
    transition: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        m = len(self.states)
        init = np.array(self.initial_dist, dtype=float)
        trans = np.array(self.transition, dtype=float)
        if init.shape != (m,) or trans.shape != (m, m):
            raise ValueError(f"shapes {init.shape}, {trans.shape} do not match {m} states")
        _check_dist(init, "initial_dist")
        _check_dist(trans, "transition")
        init.flags.writeable = False
        trans.flags.writeable = False
        object.__setattr__(self, "initial_dist", init)
        object.__setattr__(self, "transition", trans)

    def index(self, state: str | int) -> int:
        if isinstance(state, str):
            return self.states.index(state)
        if not 0 <= state < len(self.states):
            raise ValueError(f"state index {state} out of range")
        return int(state)


@dataclasses.dataclass(frozen=True, eq=False)
class ConditionalDists:
    """State-conditional distributions of the supply and demand multipliers.

    ``supply_probs[m, j]`` is the probability of multiplier ``supply_levels[j]``
    in state ``m``; ``demand_probs[m, b]`` that of bracket
    ``demand_brackets[b] = (low, high)``.
    """

    supply_levels: np.ndarray
    supply_probs: np.ndarray
    demand_brackets: np.ndarray
    demand_probs: np.ndarray

    def __post_init__(self) -> None:
        levels = np.array(self.supply_levels, dtype=float)
        sp = np.array(self.supply_probs, dtype=float)
        brackets = np.array(self.demand_brackets, dtype=float)
        dp = np.array(self.demand_probs, dtype=float)
        if sp.ndim != 2 or sp.shape[1] != levels.shape[0]:
            raise ValueError("supply_probs must be (states, levels)")
        if brackets.ndim != 2 or brackets.shape[1] != 2 or dp.ndim != 2 or dp.shape[1] != brackets.shape[0]:
            raise ValueError("demand_probs must be (states, brackets) with brackets (n, 2)")
        if sp.shape[0] != dp.shape[0]:
            raise ValueError("supply and demand tables disagree on the number of states")
        if np.any(levels < 0) or np.any(brackets < 0):
            raise ValueError("multipliers must be nonnegative")
        if np.any(brackets[:, 0] > brackets[:, 1]):
            raise ValueError("bracket low must not exceed high")
        ordered = brackets[np.argsort(brackets[:, 0])]
        if np.any(ordered[1:, 0] < ordered[:-1, 1] - 1e-12):
            raise ValueError("demand brackets overlap")
        _check_dist(sp, "supply_probs")
        _check_dist(dp, "demand_probs")
        for name, arr in (("supply_levels", levels), ("supply_probs", sp), ("demand_brackets", brackets), ("demand_probs", dp)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def num_states(self) -> int:
        return self.supply_probs.shape[0]


def default_stochastic_model() -> tuple[MarkovSpec, ConditionalDists]:
    spec = MarkovSpec(
        states=("H", "M", "L"),
        initial_dist=[0.3, 0.4, 0.3],
        transition=[[0.7, 0.2, 0.1], [0.3, 0.5, 0.2], [0.1, 0.2, 0.7]],
    )
    highs = np.array([1.45, 1.35, 1.25, 1.15, 1.05, 0.95, 0.85, 0.75, 0.65])
    dists = ConditionalDists(
        supply_levels=[1.2, 1.1, 1.0, 0.9, 0.8],
        supply_probs=[
            [0.05, 0.10, 0.25, 0.35, 0.25],
            [0.20, 0.15, 0.35, 0.20, 0.10],
            [0.30, 0.30, 0.25, 0.10, 0.05],
        ],
        demand_brackets=np.round(np.column_stack([highs - 0.1, highs]), 10),
        demand_probs=[
            [0.15, 0.30, 0.25, 0.15, 0.05, 0.04, 0.04, 0.02, 0.00],
            [0.04, 0.06, 0.10, 0.25, 0.25, 0.10, 0.10, 0.06, 0.04],
            [0.00, 0.02, 0.04, 0.04, 0.10, 0.15, 0.20, 0.30, 0.15],
        ],
    )
    return spec, dists


# ---------------------------------------------------------------------------
# sampling primitives shared by the path sampler and the frequency check


def _pick(cdf: np.ndarray, u: np.ndarray | float) -> np.ndarray:
    # renormalize so rounding in the last cell can never select a zero-probability tail
    idx = np.searchsorted(cdf / cdf[-1], u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def _draw_state(spec: MarkovSpec, prev: int | None, rng: np.random.Generator) -> int:
    row = spec.initial_dist if prev is None else spec.transition[prev]
    return int(_pick(np.cumsum(row), rng.random()))


def _draw_supply_levels(dists: ConditionalDists, state: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return _pick(np.cumsum(dists.supply_probs[state]), rng.random(n))


def _draw_demand_multipliers(dists: ConditionalDists, state: int, shape: tuple[int, ...], rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    u = rng.random(shape + (2,))
    bracket = _pick(np.cumsum(dists.demand_probs[state]), u[..., 0])
    low = dists.demand_brackets[bracket, 0]
    high = dists.demand_brackets[bracket, 1]
    return bracket, low + (high - low) * u[..., 1]


@dataclasses.dataclass(frozen=True, eq=False)
class SamplePath:
    """One realization over periods ``0..T``.

    ``states[t]`` is the Markov state index (-1 before ``start_period``),
    ``demand[i, k, t]`` the demand at POD ``i`` (0-based among PODs) and
    ``supply[k, t]`` the ground supply limit.
    """

    states: np.ndarray
    demand: np.ndarray
    supply: np.ndarray
    start_period: int = 0

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SamplePath):
            return NotImplemented
        return (
            self.start_period == other.start_period
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.supply, other.supply)
        )

    __hash__ = None  # type: ignore[assignment]


def sample_path(
    spec: MarkovSpec,
    dists: ConditionalDists,
    inst: Instance,
    seed: Seed,
    start_state: str | int | None = None,
    start_period: int = 0,
) -> SamplePath:
    """Sample states, demand and supply for periods ``start_period..T``."""
    T = inst.horizon
    if not 0 <= start_period <= T:
        raise ValueError(f"start_period must lie in 0..{T}, got {start_period}")
    if dists.num_states != len(spec.states):
        raise ValueError("conditional tables and Markov chain disagree on the number of states")
    S, K = inst.num_pods, inst.num_items
    states = np.full(T + 1, -1, dtype=int)
    demand = np.zeros((S, K, T + 1))
    supply = np.zeros((K, T + 1))
    prev = None
    for t in range(start_period, T + 1):
        if t == start_period and start_state is not None:
            states[t] = spec.index(start_state)
        else:
            states[t] = _draw_state(spec, prev, stream(seed, t, LAYER_MARKOV))
        prev = states[t]
        levels = _draw_supply_levels(dists, prev, K, stream(seed, t, LAYER_SUPPLY))
        supply[:, t] = dists.supply_levels[levels] * inst.baseline_supply
        if t > 0:
            _, mult = _draw_demand_multipliers(dists, prev, (S, K), stream(seed, t, LAYER_DEMAND))
            demand[:, :, t] = mult * inst.baseline_demand
    return SamplePath(states, demand, supply, start_period)


@dataclasses.dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Scenarios stacked along the first axis, with probabilities.

    Arrays always span periods ``0..T``; periods before ``start_period`` hold
    whatever history the caller filled in (zeros from the sampler).
    """

    states: np.ndarray  # (n, T+1)
    demand: np.ndarray  # (n, S, K, T+1)
    supply: np.ndarray  # (n, K, T+1)
    probs: np.ndarray  # (n,)
    start_period: int = 0

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("a scenario set needs at least one scenario")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"scenario probabilities must sum to 1, got {p.sum()!r}")
        n = p.shape[0]
        if self.states.shape[0] != n or self.demand.shape[0] != n or self.supply.shape[0] != n:
            raise ValueError("scenario arrays disagree on the number of scenarios")
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.shape[0]

    @property
    def horizon(self) -> int:
        return self.states.shape[1] - 1

    def path(self, j: int) -> SamplePath:
        return SamplePath(self.states[j], self.demand[j], self.supply[j], self.start_period)

    def with_history(self, path: SamplePath, upto: int) -> "ScenarioSet":
        """Copy with periods ``< upto`` overwritten by the realized values of ``path``."""
        states, demand, supply = self.states.copy(), self.demand.copy(), self.supply.copy()
        states[:, :upto] = path.states[:upto]
        demand[:, :, :, :upto] = path.demand[:, :, :upto]
        supply[:, :, :upto] = path.supply[:, :upto]
        return ScenarioSet(states, demand, supply, self.probs, self.start_period)

    def mean(self) -> "ScenarioSet":
        """Single scenario holding the probability-weighted average demand and supply."""
        p = self.probs
        demand = np.tensordot(p, self.demand, axes=1)[None]
        supply = np.tensordot(p, self.supply, axes=1)[None]
        return ScenarioSet(self.states[:1].copy(), demand, supply, np.ones(1), self.start_period)


def scenario_set_from_paths(paths: Sequence[SamplePath], probs: Sequence[float] | None = None) -> ScenarioSet:
    if not paths:
        raise ValueError("need at least one path")
    n = len(paths)
    p = np.full(n, 1.0 / n) if probs is None else np.asarray(probs, dtype=float)
    return ScenarioSet(
        np.stack([q.states for q in paths]),
        np.stack([q.demand for q in paths]),
        np.stack([q.supply for q in paths]),
        p,
        min(q.start_period for q in paths),
    )


def sample_scenario_set(
    spec: MarkovSpec,
    dists: ConditionalDists,
    inst: Instance,
    n: int,
    seed: Seed,
    start_state: str | int | None = None,
    start_period: int = 0,
) -> ScenarioSet:
    """``n`` independent paths (path ``j`` keyed by ``(*seed, j)``) with probability ``1/n`` each."""
    if n < 1:
        raise ValueError(f"need at least one scenario, got n={n}")
    paths = [sample_path(spec, dists, inst, seed_key(seed, j), start_state, start_period) for j in range(n)]
    return scenario_set_from_paths(paths)


@dataclasses.dataclass
class FrequencyReport:
    transition_freq: np.ndarray
    supply_freq: np.ndarray
    demand_freq: np.ndarray
    max_transition_dev: float
    max_supply_dev: float
    max_demand_dev: float
    state_counts: np.ndarray


def empirical_check(spec: MarkovSpec, dists: ConditionalDists, n_steps: int, seed: Seed) -> FrequencyReport:
    """Simulate one long chain and compare empirical to specified frequencies.

    Rows of states that are never visited get frequency 0 and are left out of
    the deviation maxima.
    """
    if n_steps < 1000:
        raise ValueError("n_steps must be at least 1000")
    m = len(spec.states)
    trans = np.zeros((m, m))
    supply = np.zeros((m, dists.supply_levels.shape[0]))
    demand = np.zeros((m, dists.demand_brackets.shape[0]))
    # one long chain from a single stream; per-step keyed streams would be
    # needlessly slow for 1e5 steps
    u = stream(seed, n_steps, LAYER_MARKOV).random(n_steps)
    init_cdf = np.cumsum(spec.initial_dist)
    trans_cdf = np.cumsum(spec.transition, axis=1)
    states = np.empty(n_steps, dtype=int)
    prev = int(_pick(init_cdf, u[0]))
    states[0] = prev
    for t in range(1, n_steps):
        s = int(_pick(trans_cdf[prev], u[t]))
        trans[prev, s] += 1
        states[t] = prev = s
    visits = np.bincount(states, minlength=m)
    # one supply level and one demand bracket per step, from the sampler's own streams
    for s in range(m):
        idx = np.flatnonzero(states == s)
        if idx.size == 0:
            continue
        rng_s = stream(seed, n_steps, LAYER_SUPPLY, s)
        rng_d = stream(seed, n_steps, LAYER_DEMAND, s)
        lv = _draw_supply_levels(dists, s, idx.size, rng_s)
        br, _ = _draw_demand_multipliers(dists, s, (idx.size,), rng_d)
        supply[s] = np.bincount(lv, minlength=supply.shape[1])
        demand[s] = np.bincount(br, minlength=demand.shape[1])

    def normalize(counts: np.ndarray) -> np.ndarray:
        tot = counts.sum(axis=1, keepdims=True)
        return np.divide(counts, tot, out=np.zeros_like(counts), where=tot > 0)

    tf, sf, df = normalize(trans), normalize(supply), normalize(demand)
    seen_t = trans.sum(axis=1) > 0
    seen = visits > 0

    def dev(freq: np.ndarray, ref: np.ndarray, mask: np.ndarray) -> float:
        return float(np.max(np.abs(freq[mask] - ref[mask]))) if mask.any() else 0.0

    return FrequencyReport(
        transition_freq=tf,
        supply_freq=sf,
        demand_freq=df,
        max_transition_dev=dev(tf, spec.transition, seen_t),
        max_supply_dev=dev(sf, dists.supply_probs, seen),
        max_demand_dev=dev(df, dists.demand_probs, seen),
        state_counts=visits,
    )


# ---------------------------------------------------------------------------
# files

MODEL_FORMAT = "reliefplan-stochastic-model"


def stochastic_model_to_dict(spec: MarkovSpec, dists: ConditionalDists) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": 1,
        "states": list(spec.states),
        "initial": spec.initial_dist.tolist(),
        "transition": spec.transition.tolist(),
        "supply_levels": dists.supply_levels.tolist(),
        "supply_probs": dists.supply_probs.tolist(),
        "demand_brackets": dists.demand_brackets.tolist(),
        "demand_probs": dists.demand_probs.tolist(),
    }


def write_stochastic_model(spec: MarkovSpec, dists: ConditionalDists, path: str | Path) -> None:
    Path(path).write_text(json.dumps(stochastic_model_to_dict(spec, dists), indent=2) + "\n")


def load_stochastic_model(path: str | Path) -> tuple[MarkovSpec, ConditionalDists]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"parse error: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"expected format {MODEL_FORMAT!r}")
    try:
        spec = MarkovSpec(doc["states"], doc["initial"], doc["transition"])
        dists = ConditionalDists(doc["supply_levels"], doc["supply_probs"], doc["demand_brackets"], doc["demand_probs"])
    except KeyError as exc:
        raise ValueError(f"missing key {exc}") from None
    if dists.num_states != len(spec.states):
        raise ValueError("conditional tables and Markov chain disagree on the number of states")
    return spec, dists


def path_header(inst: Instance) -> list[str]:
    cols = ["path", "period", "state"]
    cols += [f"R_k{k + 1}" for k in range(inst.num_items)]
    cols += [f"D_pod{inst.num_sas + i + 1}_k{k + 1}" for i in range(inst.num_pods) for k in range(inst.num_items)]
    return cols


def write_paths_csv(paths: Iterable[SamplePath], inst: Instance, spec: MarkovSpec, path: str | Path) -> None:
    """Dump paths as one row per (path, period)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(path_header(inst))
        for j, p in enumerate(paths):
            for t in range(p.horizon + 1):
                state = spec.states[p.states[t]] if p.states[t] >= 0 else ""
                row = [j, t, state]
                row += [repr(float(v)) for v in p.supply[:, t]]
                row += [repr(float(v)) for v in p.demand[:, :, t].ravel()]
                w.writerow(row)


def read_paths_csv(path: str | Path, inst: Instance, spec: MarkovSpec) -> list[SamplePath]:
    S, K, T = inst.num_pods, inst.num_items, inst.horizon
    rows: dict[int, list[list[str]]] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != path_header(inst):
            raise ValueError("path file header does not match the instance")
        for row in r:
            rows.setdefault(int(row[0]), []).append(row)
    out = []
    for j in sorted(rows):
        recs = sorted(rows[j], key=lambda row: int(row[1]))
        if len(recs) != T + 1:
            raise ValueError(f"path {j} has {len(recs)} periods, expected {T + 1}")
        states = np.array([spec.states.index(row[2]) if row[2] else -1 for row in recs])
        supply = np.array([[float(v) for v in row[3 : 3 + K]] for row in recs]).T
        demand = np.array([[float(v) for v in row[3 + K :]] for row in recs]).T.reshape(S, K, T + 1)
        start = int(np.argmax(states >= 0)) if np.any(states >= 0) else 0
        out.append(SamplePath(states, demand, supply, start))
    return out
