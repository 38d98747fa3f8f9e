import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lam, layer_dep, pattern_charges
from reliefplan import build_dep_table, compute_dep, expected_dep_coefficients, lambda_fn
from reliefplan.deprivation import DeprivationTable, lambda_table, streak_charges


def rate(t):
    return lam(t)


def test_lambda_zero(inst):
    assert lambda_fn(inst, 0, 0) == 0.0


@pytest.mark.parametrize("t,expected", [(1, 17.1420), (3, 58.2614)])
def test_lambda_values(inst, t, expected):
    assert lambda_fn(inst, 0, t) == pytest.approx(expected, abs=1e-3)
    assert lambda_fn(inst, 0, t) == pytest.approx(lam(t), rel=1e-14)


def test_lambda_same_for_all_items(inst):
    assert lambda_fn(inst, 0, 4) == lambda_fn(inst, 1, 4)


def test_lambda_negative_time(inst):
    with pytest.raises(ValueError):
        lambda_fn(inst, 0, -1)


def test_lambda_table_matches(inst):
    np.testing.assert_allclose(lambda_table(inst, 6), [lam(t) for t in range(7)], rtol=1e-14)


def test_worked_example(inst):
    # three-period streak with a dip in the middle
    assert compute_dep([120, 100, 120], 0, inst) == pytest.approx(100 * lam(3) + 2 * 20 * lam(1), rel=1e-12)
    assert compute_dep([120, 100, 120], 0, inst) == pytest.approx(6511.82, abs=0.01)


def test_zero_list(inst):
    assert compute_dep([0, 0, 0], 0, inst) == 0.0


def test_zero_splits_list(inst):
    assert compute_dep([100, 0, 50], 0, inst) == pytest.approx(150 * lam(1), rel=1e-12)


def test_rejects_bad_lists(inst):
    with pytest.raises(ValueError):
        compute_dep([], 0, inst)
    with pytest.raises(ValueError):
        compute_dep([1, -1], 0, inst)


def test_exhaustive_small_lists(inst):
    for n in range(1, 5):
        for lst in itertools.product((0, 10, 20, 30), repeat=n):
            assert compute_dep(list(lst), 0, inst) == pytest.approx(layer_dep(lst, rate), rel=1e-9, abs=1e-12)


amounts = st.lists(st.floats(0.0, 500.0, allow_nan=False), min_size=1, max_size=8)


@settings(max_examples=300, deadline=None)
@given(lst=amounts)
def test_matches_layer_oracle(inst, lst):
    assert compute_dep(lst, 0, inst) == pytest.approx(layer_dep(lst, rate), rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(lst=amounts, c=st.floats(0.0, 50.0, allow_nan=False))
def test_scaling_linearity(inst, lst, c):
    scaled = compute_dep([c * a for a in lst], 0, inst)
    assert scaled == pytest.approx(c * compute_dep(lst, 0, inst), rel=1e-9, abs=1e-7)


@settings(max_examples=200, deadline=None)
@given(lst=st.lists(st.floats(0.01, 500.0), min_size=1, max_size=7), extra=st.floats(0.01, 500.0))
def test_appending_positive_entry_increases(inst, lst, extra):
    assert compute_dep(lst + [extra], 0, inst) > compute_dep(lst, 0, inst)


def test_table_from_example_demand(inst):
    # one POD row holds the worked example ending at period 4
    demand = np.zeros((inst.num_pods, inst.num_items, 6))
    demand[0, 0, 1:5] = [50, 120, 100, 120]
    table = build_dep_table(inst, demand)
    assert table.get(0, 0, 0, 3, 4) == pytest.approx(compute_dep([120, 100, 120], 0, inst))


def test_table_zero_demand(inst):
    table = build_dep_table(inst, np.zeros((2, inst.num_pods, inst.num_items, 6)))
    defined = ~np.isnan(table.dep)
    assert np.all(table.dep[defined] == 0)


def test_table_constant_demand(inst):
    d = 37.5
    demand = np.full((inst.num_pods, inst.num_items, 6), d)
    demand[:, :, 0] = 0
    table = build_dep_table(inst, demand)
    for t in range(2, 6):
        assert table.get(0, 1, 1, 2, t) == pytest.approx(d * lam(2), rel=1e-12)


def test_table_domain(inst):
    table = build_dep_table(inst, np.ones((inst.num_pods, inst.num_items, 6)))
    assert table.get(0, 0, 0, 0, 3) == 0.0
    with pytest.raises(IndexError):
        table.get(0, 0, 0, 4, 3)


def test_table_dimension_check(inst):
    with pytest.raises(ValueError):
        build_dep_table(inst, np.ones((3, 2, 6)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_table_nondecreasing_in_tau(inst, seed):
    rng = np.random.default_rng(seed)
    demand = rng.uniform(1, 300, (inst.num_pods, inst.num_items, 6))
    dep = build_dep_table(inst, demand).dep[0]
    for t in range(1, 6):
        assert np.all(np.diff(dep[:, :, : t + 1, t], axis=-1) >= -1e-9)


def test_expected_single_scenario(inst):
    table = build_dep_table(inst, np.random.default_rng(0).uniform(0, 100, (inst.num_pods, inst.num_items, 6)))
    np.testing.assert_array_equal(expected_dep_coefficients(table, [1.0]), table.dep[0])


def test_expected_identical_scenarios(inst):
    d = np.random.default_rng(1).uniform(0, 100, (inst.num_pods, inst.num_items, 6))
    table = build_dep_table(inst, np.stack([d, d]))
    np.testing.assert_allclose(expected_dep_coefficients(table, [0.5, 0.5]), table.dep[0], equal_nan=True)


def test_expected_weighted_average():
    dep = np.zeros((2, 1, 1, 2, 2))
    dep[0, 0, 0, 1, 1], dep[1, 0, 0, 1, 1] = 10.0, 30.0
    e = expected_dep_coefficients(DeprivationTable(dep), [0.25, 0.75])
    assert e[0, 0, 1, 1] == pytest.approx(25.0)


def test_expected_rejects_bad_probs():
    table = DeprivationTable(np.zeros((2, 1, 1, 2, 2)))
    with pytest.raises(ValueError):
        expected_dep_coefficients(table, [0.5, 0.6])


@settings(max_examples=100, deadline=None)
@given(alpha=st.lists(st.booleans(), min_size=1, max_size=7), data=st.data())
def test_streak_charges_match_oracle(alpha, data):
    alpha = [True] + alpha
    demand = [0.0] + data.draw(st.lists(st.floats(0, 300), min_size=len(alpha) - 1, max_size=len(alpha) - 1))
    rates = [lam(t) for t in range(len(alpha) + 1)]
    total = sum(c for _, c in streak_charges(alpha, demand, rates))
    assert total == pytest.approx(pattern_charges(alpha, demand, rate), rel=1e-9, abs=1e-9)
