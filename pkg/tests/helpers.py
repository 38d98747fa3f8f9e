import numpy as np

from reliefplan.instance import Instance

ACCEPTANCE: dict[int, str] = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def toy_instance(horizon: int = 3, demand: float = 100.0) -> Instance:
    """One SA, one POD, one item."""
    return Instance(
        num_sas=1,
        num_pods=1,
        num_items=1,
        horizon=horizon,
        ground_cost_matrix=np.array([[0.0, 5.0], [5.0, 0.0]]),
        isb_ground_cost=np.array([10.0, 10.0]),
        isb_air_cost=np.array([500.0, 500.0]),
        sa_open_cost=np.array([10000.0]),
        handling_cost=np.array([1.0]),
        capacity=np.array([[1400.0], [350.0]]),
        baseline_demand=np.array([[demand]]),
        baseline_supply=np.array([demand]),
        deprivation_delta=30.0,
    )


def random_milp(rng: np.random.Generator, max_bin: int = 10, max_rows: int = 15):
    """Small bounded MILP in ``<=`` form plus the same data as arrays.

    Returns ``(model, c, A, b, binaries, bounds)``.  The all-zero point is
    always feasible, so the optimum exists.
    """
    from reliefplan.milp import MilpModel

    nb = int(rng.integers(1, max_bin + 1))
    nc = int(rng.integers(0, 4))
    m = int(rng.integers(1, max_rows + 1))
    n = nb + nc
    c = np.round(rng.uniform(-10, 10, n), 2)
    A = np.round(rng.uniform(-5, 10, (m, n)), 2)
    A[rng.random((m, n)) < 0.3] = 0.0
    b = np.round(rng.uniform(0, 20, m), 2)
    bounds = [(0.0, 1.0)] * nb + [(0.0, float(rng.integers(1, 6))) for _ in range(nc)]
    model = MilpModel("rand")
    for j in range(n):
        model.add_var(f"x{j}", bounds[j][0], bounds[j][1], "B" if j < nb else "C", c[j])
    for i in range(m):
        model.add_constr({j: A[i, j] for j in range(n) if A[i, j] != 0}, "<=", b[i])
    return model, c, A, b, list(range(nb)), bounds
