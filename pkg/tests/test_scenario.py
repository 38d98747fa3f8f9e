import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reliefplan import (
    ConditionalDists,
    MarkovSpec,
    default_instance,
    default_stochastic_model,
    empirical_check,
    sample_path,
    sample_scenario_set,
)
from reliefplan.instance import with_horizon
from reliefplan.scenario import (
    load_stochastic_model,
    read_paths_csv,
    scenario_set_from_paths,
    write_paths_csv,
    write_stochastic_model,
)


def test_default_chain(model):
    spec, _ = model
    assert spec.states == ("H", "M", "L")
    np.testing.assert_allclose(spec.initial_dist, [0.3, 0.4, 0.3])
    np.testing.assert_allclose(spec.transition[0], [0.7, 0.2, 0.1])
    np.testing.assert_allclose(spec.transition.sum(axis=1), 1.0)


def test_default_tables(model):
    _, dists = model
    np.testing.assert_allclose(dists.supply_levels, [1.2, 1.1, 1.0, 0.9, 0.8])
    np.testing.assert_allclose(dists.supply_probs.sum(axis=1), 1.0)
    np.testing.assert_allclose(dists.demand_probs.sum(axis=1), 1.0)
    widths = dists.demand_brackets[:, 1] - dists.demand_brackets[:, 0]
    np.testing.assert_allclose(widths, 0.1)
    assert dists.demand_brackets.min() == pytest.approx(0.55)
    assert dists.demand_brackets.max() == pytest.approx(1.45)


def test_same_seed_same_path(inst, model):
    a = sample_path(*model, inst, (7, 3))
    b = sample_path(*model, inst, (7, 3))
    assert a == b


def test_different_seed_different_path(inst, model):
    assert sample_path(*model, inst, 1) != sample_path(*model, inst, 2)


def test_scenario_set_order_independent(inst, model):
    sset = sample_scenario_set(*model, inst, 5, 11)
    assert sset.path(3) == sample_path(*model, inst, (11, 3))
    np.testing.assert_allclose(sset.probs, 0.2)


def test_supply_table_change_leaves_demand(inst, model):
    spec, dists = model
    other = ConditionalDists(dists.supply_levels * 0.5, dists.supply_probs[:, ::-1], dists.demand_brackets, dists.demand_probs)
    a = sample_path(spec, dists, inst, 9)
    b = sample_path(spec, other, inst, 9)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.demand, b.demand)


def test_absorbing_chain_stays(inst, model):
    _, dists = model
    spec = MarkovSpec(("H", "M", "L"), [0, 0, 1], np.eye(3))
    for s in range(20):
        assert np.all(sample_path(spec, dists, inst, s).states == 2)


def test_start_state_and_period(inst, model):
    p = sample_path(*model, inst, 5, start_state="L", start_period=2)
    assert p.states[:2].tolist() == [-1, -1]
    assert p.states[2] == 2
    assert np.all(p.demand[:, :, :2] == 0) and np.all(p.supply[:, :2] == 0)
    with pytest.raises(ValueError):
        sample_path(*model, inst, 5, start_period=inst.horizon + 1)


def test_no_demand_at_period_zero(inst, model):
    assert np.all(sample_path(*model, inst, 4).demand[:, :, 0] == 0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**40))
def test_draws_lie_in_allowed_sets(seed):
    inst = default_instance()
    spec, dists = default_stochastic_model()
    p = sample_path(spec, dists, inst, seed)
    for t in range(inst.horizon + 1):
        m = p.states[t]
        levels = p.supply[:, t] / inst.baseline_supply
        allowed = dists.supply_levels[dists.supply_probs[m] > 0]
        assert all(np.isclose(allowed, v).any() for v in levels)
        if t == 0:
            continue
        mult = p.demand[:, :, t] / inst.baseline_demand
        ok = dists.demand_brackets[dists.demand_probs[m] > 0]
        inside = (mult[..., None] >= ok[:, 0] - 1e-12) & (mult[..., None] <= ok[:, 1] + 1e-12)
        assert inside.any(axis=-1).all()
    if p.states[0] >= 0 and p.states[1] >= 0:
        assert spec.transition[p.states[0], p.states[1]] > 0


def test_zero_probability_bracket_never_drawn(model):
    # state H gives the lowest bracket probability 0
    inst = with_horizon(default_instance(), 1)
    spec = MarkovSpec(("H", "M", "L"), [1, 0, 0], np.eye(3))
    low = model[1].demand_brackets[-1]
    for s in range(200):
        mult = sample_path(spec, model[1], inst, s).demand[:, :, 1] / inst.baseline_demand
        assert np.all(mult >= low[1] - 1e-12)


def test_demand_conditionally_independent_of_previous_state(model):
    # with the state at t fixed, the bracket frequencies at t must not depend on the state at t-1
    inst = with_horizon(default_instance(), 2)
    spec, dists = model
    counts = {0: np.zeros(9), 2: np.zeros(9)}
    for s in range(3000):
        p = sample_path(spec, dists, inst, (5, s))
        if p.states[2] != 1 or p.states[1] not in counts:
            continue
        mult = (p.demand[:, :, 2] / inst.baseline_demand).ravel()
        idx = np.searchsorted(np.sort(dists.demand_brackets[:, 0]), mult, side="right") - 1
        counts[p.states[1]] += np.bincount(idx, minlength=9)
    f0, f2 = (c / c.sum() for c in counts.values())
    assert np.abs(f0 - f2).max() < 0.04


def test_single_scenario_set(inst, model):
    sset = sample_scenario_set(*model, inst, 1, 3)
    assert len(sset) == 1 and sset.probs.tolist() == [1.0]
    assert sset.mean().path(0) == sset.path(0)
    with pytest.raises(ValueError):
        sample_scenario_set(*model, inst, 0, 3)


def test_mean_scenario(inst, model):
    sset = sample_scenario_set(*model, inst, 4, 8)
    np.testing.assert_allclose(sset.mean().demand[0], sset.demand.mean(axis=0))
    np.testing.assert_allclose(sset.mean().supply[0], sset.supply.mean(axis=0))


def test_with_history(inst, model):
    sset = sample_scenario_set(*model, inst, 3, 8, start_period=2)
    real = sample_path(*model, inst, 99)
    h = sset.with_history(real, 2)
    for j in range(3):
        np.testing.assert_array_equal(h.demand[j, :, :, :2], real.demand[:, :, :2])
        np.testing.assert_array_equal(h.demand[j, :, :, 2:], sset.demand[j, :, :, 2:])


def test_empty_path_list_rejected():
    with pytest.raises(ValueError):
        scenario_set_from_paths([])


def test_bad_distributions_rejected(model):
    with pytest.raises(ValueError):
        MarkovSpec(("a", "b"), [0.5, 0.6], np.eye(2))
    with pytest.raises(ValueError):
        MarkovSpec(("a", "b"), [0.5, 0.5], [[1.2, -0.2], [0, 1]])
    _, d = model
    with pytest.raises(ValueError):
        ConditionalDists(d.supply_levels, d.supply_probs, [[0.5, 0.7], [0.6, 0.8]], [[0.5, 0.5]] * 3)


def test_empirical_check(model):
    rep = empirical_check(*model, 100_000, 42)
    assert rep.max_transition_dev < 0.02
    assert rep.max_supply_dev < 0.02
    assert rep.max_demand_dev < 0.02
    assert rep.state_counts.sum() == 100_000
    with pytest.raises(ValueError):
        empirical_check(*model, 999, 1)


def test_model_file_round_trip(tmp_path, model):
    p = tmp_path / "model.json"
    write_stochastic_model(*model, p)
    spec, dists = load_stochastic_model(p)
    assert spec.states == model[0].states
    np.testing.assert_array_equal(spec.transition, model[0].transition)
    np.testing.assert_array_equal(dists.demand_brackets, model[1].demand_brackets)
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ValueError):
        load_stochastic_model(tmp_path / "bad.json")


def test_paths_csv_round_trip(tmp_path, inst, model):
    paths = [sample_path(*model, inst, s) for s in range(4)]
    f = tmp_path / "paths.csv"
    write_paths_csv(paths, inst, model[0], f)
    back = read_paths_csv(f, inst, model[0])
    assert back == paths
