"""Relief-network problem instances.

An :class:`Instance` bundles the network (staging areas, points of
distribution), capacities and unit costs of one relief logistics problem.
Nodes are numbered in a single range: staging areas (SAs) first, then points
of distribution (PODs).  In zero-based array positions SA ``i`` sits at ``i``
and POD ``p`` at ``L + p``; :class:`NodeId` carries the one-based labels used
in reports (SAs ``1..L``, PODs ``L+1..L+S``).

Instance files are JSON documents with one key per parameter.  Keys follow
the usual notation of the model::

    L, S, K, T      counts of SAs, PODs, items and the last period
    B               (L+S) x (L+S) ground cost between SA/POD nodes
    B_g, B_h        per-node ISB ground / air unit cost
    eta             per-SA opening cost
    zeta            per-item handling cost
    phi             (L+S) x K capacity
    D_base          K x S baseline demand (one row per item, one column per POD)
    R_base          per-item baseline ground supply limit
    delta, weight   deprivation scale and relative weight

The writer always emits the same key order and number formatting, so
``write_instance(load_instance(p))`` reproduces ``p`` byte for byte.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

FORMAT_NAME = "reliefplan-instance"
FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Raised when an instance document is malformed or violates an invariant."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NodeKind(enum.Enum):
    SA = "SA"
    POD = "POD"
    ISB = "ISB"
    DUMMY = "DUMMY"


class NodeId(NamedTuple):
    kind: NodeKind
    index: int

    def __str__(self) -> str:
        return f"{self.kind.value}{self.index}"


# key in file -> (dataclass field, expected ndim)
_FIELDS: tuple[tuple[str, str, int], ...] = (
    ("L", "num_sas", 0),
    ("S", "num_pods", 0),
    ("K", "num_items", 0),
    ("T", "horizon", 0),
    ("B", "ground_cost_matrix", 2),
    ("B_g", "isb_ground_cost", 1),
    ("B_h", "isb_air_cost", 1),
    ("eta", "sa_open_cost", 1),
    ("zeta", "handling_cost", 1),
    ("phi", "capacity", 2),
    ("D_base", "baseline_demand", 2),
    ("R_base", "baseline_supply", 1),
    ("delta", "deprivation_delta", 0),
    ("weight", "deprivation_weight", 0),
)

_ARRAY_FIELDS = (
    "ground_cost_matrix",
    "isb_ground_cost",
    "isb_air_cost",
    "sa_open_cost",
    "handling_cost",
    "capacity",
    "baseline_demand",
    "baseline_supply",
)


def _frozen_array(value: Any) -> np.ndarray:
    arr = np.array(value, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem instance.

    Array shapes (N = L + S):

    ========================  ==========
    ground_cost_matrix        (N, N)
    isb_ground_cost           (N,)
    isb_air_cost              (N,)
    sa_open_cost              (L,)
    handling_cost             (K,)
    capacity                  (N, K)
    baseline_demand           (S, K)
    baseline_supply           (K,)
    ========================  ==========
    """

    num_sas: int
    num_pods: int
    num_items: int
    horizon: int
    ground_cost_matrix: np.ndarray
    isb_ground_cost: np.ndarray
    isb_air_cost: np.ndarray
    sa_open_cost: np.ndarray
    handling_cost: np.ndarray
    capacity: np.ndarray
    baseline_demand: np.ndarray
    baseline_supply: np.ndarray
    deprivation_delta: float
    deprivation_weight: float = 1.0

    def __post_init__(self) -> None:
        for name in ("num_sas", "num_pods", "num_items", "horizon"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InstanceError("must be an integer", name)
            object.__setattr__(self, name, int(value))
        for name in _ARRAY_FIELDS:
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        for name in ("deprivation_delta", "deprivation_weight"):
            object.__setattr__(self, name, float(getattr(self, name)))
        validate(self)

    @property
    def num_nodes(self) -> int:
        return self.num_sas + self.num_pods

    @property
    def periods(self) -> range:
        return range(self.horizon + 1)

    @property
    def sa_nodes(self) -> range:
        return range(self.num_sas)

    @property
    def pod_nodes(self) -> range:
        return range(self.num_sas, self.num_nodes)

    def node_id(self, position: int) -> NodeId:
        """Label of the node at zero-based ``position`` (``N`` is the dummy sink)."""
        if 0 <= position < self.num_sas:
            return NodeId(NodeKind.SA, position + 1)
        if self.num_sas <= position < self.num_nodes:
            return NodeId(NodeKind.POD, position + 1)
        if position == self.num_nodes:
            return NodeId(NodeKind.DUMMY, self.num_nodes + 1)
        raise IndexError(position)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None  # type: ignore[assignment]


def validate(inst: Instance) -> None:
    """Check every invariant of ``inst``; raise :class:`InstanceError` naming the field."""
    if inst.num_sas < 1:
        raise InstanceError("need at least one SA", "L")
    if inst.num_pods < 1:
        raise InstanceError("need at least one POD", "S")
    if inst.num_items < 1:
        raise InstanceError("need at least one item", "K")
    if inst.horizon < 1:
        raise InstanceError("horizon must be >= 1", "T")
    n, L, S, K = inst.num_nodes, inst.num_sas, inst.num_pods, inst.num_items
    shapes = {
        "B": (inst.ground_cost_matrix, (n, n)),
        "B_g": (inst.isb_ground_cost, (n,)),
        "B_h": (inst.isb_air_cost, (n,)),
        "eta": (inst.sa_open_cost, (L,)),
        "zeta": (inst.handling_cost, (K,)),
        "phi": (inst.capacity, (n, K)),
        "D_base": (inst.baseline_demand, (S, K)),
        "R_base": (inst.baseline_supply, (K,)),
    }
    for key, (arr, shape) in shapes.items():
        if arr.shape != shape:
            raise InstanceError(f"expected shape {shape}, got {arr.shape}", key)
        if not np.all(np.isfinite(arr)):
            raise InstanceError("entries must be finite", key)
        if np.any(arr < 0):
            raise InstanceError("entries must be nonnegative", key)
    if np.any(np.diag(inst.ground_cost_matrix) != 0):
        raise InstanceError("diagonal must be zero", "B")
    for key, value in (("delta", inst.deprivation_delta), ("weight", inst.deprivation_weight)):
        if not math.isfinite(value) or value < 0:
            raise InstanceError("must be finite and nonnegative", key)


# Unit ground costs between the two Jefferson Parish SAs and the eight New
# Orleans PODs (SA1, SA2, POD1..POD8).  The one asymmetric pair in the source
# table (POD1-POD5: 1.8 vs 1.9) is resolved to the upper-triangle value.
_DEFAULT_B = [
    [0.0, 6.0, 3.5, 3.6, 3.2, 3.6, 3.8, 5.9, 4.8, 8.7],
    [6.0, 0.0, 5.6, 4.0, 4.1, 3.9, 3.7, 3.6, 5.3, 9.4],
    [3.5, 5.6, 0.0, 1.6, 2.1, 2.0, 1.8, 3.9, 1.8, 4.7],
    [3.6, 4.0, 1.6, 0.0, 0.5, 0.35, 0.2, 2.3, 0.6, 5.0],
    [3.2, 4.1, 2.1, 0.5, 0.0, 0.2, 0.4, 2.5, 2.0, 6.1],
    [3.6, 3.9, 2.0, 0.35, 0.2, 0.0, 0.2, 2.3, 1.8, 5.9],
    [3.8, 3.7, 1.8, 0.2, 0.4, 0.2, 0.0, 2.1, 1.6, 5.7],
    [5.9, 3.6, 3.9, 2.3, 2.5, 2.3, 2.1, 0.0, 3.7, 7.8],
    [4.8, 5.3, 1.8, 0.6, 2.0, 1.8, 1.6, 3.7, 0.0, 4.1],
    [8.7, 9.4, 4.7, 5.0, 6.1, 5.9, 5.7, 7.8, 4.1, 0.0],
]

_DEFAULT_DEMAND = [  # items x PODs
    [219, 214, 195, 116, 70, 162, 205, 214],
    [177, 163, 171, 121, 69, 130, 190, 203],
]


def default_instance() -> Instance:
    """The New Orleans network: 2 SAs, 8 PODs, 2 items, T = 5."""
    L, S, K = 2, 8, 2
    demand = np.array(_DEFAULT_DEMAND, dtype=float).T
    capacity = np.vstack([np.full((L, K), 1400.0), np.full((S, K), 350.0)])
    return Instance(
        num_sas=L,
        num_pods=S,
        num_items=K,
        horizon=5,
        ground_cost_matrix=np.array(_DEFAULT_B),
        isb_ground_cost=np.full(L + S, 10.0),
        isb_air_cost=np.full(L + S, 500.0),
        sa_open_cost=np.full(L, 10000.0),
        handling_cost=np.ones(K),
        capacity=capacity,
        baseline_demand=demand,
        baseline_supply=demand.sum(axis=0),
        deprivation_delta=30.0,
        deprivation_weight=1.0,
    )


def scale_instance(inst: Instance, demand_supply_mult: float = 1.0, weight_mult: float = 1.0) -> Instance:
    """Multiply baseline demand/supply and the deprivation weight."""
    if not demand_supply_mult > 0:
        raise ValueError(f"demand_supply_mult must be positive, got {demand_supply_mult}")
    if not weight_mult > 0:
        raise ValueError(f"weight_mult must be positive, got {weight_mult}")
    return dataclasses.replace(
        inst,
        baseline_demand=inst.baseline_demand * demand_supply_mult,
        baseline_supply=inst.baseline_supply * demand_supply_mult,
        deprivation_weight=inst.deprivation_weight * weight_mult,
    )


def with_horizon(inst: Instance, horizon: int) -> Instance:
    return dataclasses.replace(inst, horizon=horizon)


# ---------------------------------------------------------------------------
# file format


def _fmt(value: Any) -> str:
    return json.dumps(value)


def _fmt_row(row: np.ndarray) -> str:
    return "[" + ", ".join(_fmt(float(v)) for v in row) + "]"


def instance_to_text(inst: Instance) -> str:
    """Canonical text form of ``inst``."""
    lines = ["{", f'  "format": {_fmt(FORMAT_NAME)},', f'  "version": {FORMAT_VERSION},']
    values = {
        "L": inst.num_sas,
        "S": inst.num_pods,
        "K": inst.num_items,
        "T": inst.horizon,
        "B": inst.ground_cost_matrix,
        "B_g": inst.isb_ground_cost,
        "B_h": inst.isb_air_cost,
        "eta": inst.sa_open_cost,
        "zeta": inst.handling_cost,
        "phi": inst.capacity,
        "D_base": inst.baseline_demand.T,
        "R_base": inst.baseline_supply,
        "delta": inst.deprivation_delta,
        "weight": inst.deprivation_weight,
    }
    entries = []
    for key, _, ndim in _FIELDS:
        v = values[key]
        if ndim == 0:
            entries.append(f'  "{key}": {_fmt(v)}')
        elif ndim == 1:
            entries.append(f'  "{key}": {_fmt_row(v)}')
        else:
            rows = ",\n".join("    " + _fmt_row(r) for r in v)
            entries.append(f'  "{key}": [\n{rows}\n  ]')
    lines.append(",\n".join(entries))
    lines.append("}")
    return "\n".join(lines) + "\n"


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("top level must be an object")
    if doc.get("format") != FORMAT_NAME:
        raise InstanceError(f"expected format {FORMAT_NAME!r}", "format")
    if doc.get("version") != FORMAT_VERSION:
        raise InstanceError(f"unsupported version {doc.get('version')!r}", "version")
    known = {key for key, _, _ in _FIELDS} | {"format", "version"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise InstanceError(f"unknown keys {unknown}")
    kwargs: dict[str, Any] = {}
    for key, name, ndim in _FIELDS:
        if key not in doc:
            raise InstanceError("missing", key)
        value = doc[key]
        if ndim == 0:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InstanceError("expected a number", key)
            kwargs[name] = value
            continue
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InstanceError(f"not a numeric table ({exc})", key) from None
        if arr.ndim != ndim:
            raise InstanceError(f"expected {ndim}-d table, got {arr.ndim}-d", key)
        kwargs[name] = arr.T if key == "D_base" else arr
    return Instance(**kwargs)


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(instance_to_text(inst))


def load_instance(path: str | Path) -> Instance:
    """Read and validate an instance file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error: {exc}") from None
    return instance_from_dict(doc)
