import math

import numpy as np
import pytest

from conftest import adj_history, walk_history
from devlab import adjacent_ones as ao
from devlab import exact_oracle as oracle
from devlab import random_walk as rw
from devlab.core import InvalidInputError, validated_distribution
from devlab.deviations import KINDS, DeviationSpec, apply_deviations, build_deviation

ADJ = ao.adjacent_ones_goal(0.1)
WALK = rw.random_walk_goal(10)


def test_first_move_then_honest_example():
    strat = build_deviation(DeviationSpec(0, "first_move_then_honest", action=1), ADJ)
    assert strat(()) == (0.0, 1.0)  # period 1: forced 1
    assert strat(adj_history([1]))[0] == 1.0  # period 2, off-turn untouched
    dist = strat(adj_history([1, 0]))  # period 3 onward: honest mu/n
    assert dist[1] == pytest.approx(0.1 / 3, abs=1e-15)


def test_honest_spec_equals_baseline_on_random_histories():
    rng = np.random.default_rng(3)
    strat = build_deviation(DeviationSpec(1, "honest"), ADJ)
    base = ADJ.profile.strategies[1]
    for _ in range(100):
        bits = rng.integers(0, 2, size=int(rng.integers(0, 12))).tolist()
        hist = adj_history(bits)
        assert tuple(strat(hist)) == tuple(base(hist))


def test_pin_to_band_steering_example():
    strat = build_deviation(DeviationSpec(1, "pin_to_band", lo=1, hi=3), WALK)
    # five -1 moves bring the walk from 10 to 5 with period 6 = B's turn
    hist = walk_history([-1] * 5)
    assert strat(hist) == (1.0, 0.0)  # point mass on -1, steering down


def test_pin_to_band_zero_guard_and_interior():
    strat = build_deviation(DeviationSpec(1, "pin_to_band", lo=1, hi=3), WALK)
    at_one = walk_history([-1] * 9)  # s = 1 at B's 10th-period turn
    assert strat(at_one) == (0.0, 1.0)  # never steps onto the origin
    at_three = walk_history([-1] * 7)  # s = 3: interior, honest
    assert strat(at_three) == (0.5, 0.5)


def test_reflect_at_one():
    strat = build_deviation(DeviationSpec(1, "reflect_at_one"), WALK)
    assert strat(walk_history([-1] * 9)) == (0.0, 1.0)
    assert strat(walk_history([-1] * 5)) == (0.5, 0.5)
    assert strat(walk_history([-1] * 4))[0] == 1.0  # off-turn period 5 untouched


def test_built_strategies_emit_valid_distributions():
    rng = np.random.default_rng(4)
    specs = [
        DeviationSpec(0, "honest"),
        DeviationSpec(0, "always", action=1),
        DeviationSpec(0, "first_move_then_honest", action=-1),
        DeviationSpec(0, "biased", p=0.3),
        DeviationSpec(0, "drift_up", p=0.2),
        DeviationSpec(0, "pin_to_band", lo=2, hi=4),
        DeviationSpec(0, "reflect_at_one"),
    ]
    for spec in specs:
        strat = build_deviation(spec, WALK)
        for _ in range(40):
            moves = rng.choice((-1, 1), size=2 * int(rng.integers(0, 10))).tolist()
            dist = strat(walk_history(moves))
            validated_distribution(dist, 2)


def test_deviation_spec_validation():
    with pytest.raises(InvalidInputError):
        DeviationSpec(0, "unknown_kind")
    with pytest.raises(InvalidInputError):
        DeviationSpec(0, "always")  # missing action
    with pytest.raises(InvalidInputError):
        DeviationSpec(0, "biased", p=1.5)
    with pytest.raises(InvalidInputError):
        DeviationSpec(0, "pin_to_band", lo=0, hi=3)
    assert set(KINDS) >= {"honest", "always", "biased"}


def test_alphabet_and_goal_mismatch_errors():
    with pytest.raises(InvalidInputError):
        build_deviation(DeviationSpec(0, "always", action=7), ADJ)
    with pytest.raises(InvalidInputError):
        build_deviation(DeviationSpec(0, "pin_to_band", lo=1, hi=3), ADJ)
    with pytest.raises(InvalidInputError):
        build_deviation(DeviationSpec(0, "reflect_at_one"), ADJ)
    with pytest.raises(InvalidInputError):
        apply_deviations(ADJ, [DeviationSpec(0, "honest"), DeviationSpec(0, "honest")])


def _scenario_profiles(mu):
    goal = ao.adjacent_ones_goal(mu)
    sc1 = apply_deviations(goal, [DeviationSpec(0, "first_move_then_honest", action=1)])
    sc2 = apply_deviations(goal, [DeviationSpec(1, "first_move_then_honest", action=1)])
    return goal, sc1, sc2


def _p11_and_conditional(profile, horizon=6):
    measure = oracle.enumerate_measure(profile, horizon)
    total = 0.0
    conditional = {}
    for hist, p in measure.items():
        bits = ao.realized_bits(hist)
        if bits[0] == 1 and bits[1] == 1:
            total += p
            key = tuple(bits[2:])
            conditional[key] = conditional.get(key, 0.0) + p
    return total, {k: v / total for k, v in conditional.items()}


def test_tightness_scenario_rates():
    mu = 0.1
    goal, sc1, sc2 = _scenario_profiles(mu)
    p_honest, _ = _p11_and_conditional(goal.profile)
    p_sc1, _ = _p11_and_conditional(sc1)
    p_sc2, _ = _p11_and_conditional(sc2)
    assert p_honest == pytest.approx(mu * mu / 2, abs=1e-15)
    assert p_sc1 == pytest.approx(mu / 2, abs=1e-15)
    assert p_sc2 == pytest.approx(mu, abs=1e-15)


def test_tightness_conditional_indistinguishability():
    _, sc1, sc2 = _scenario_profiles(0.1)
    _, cond1 = _p11_and_conditional(sc1)
    _, cond2 = _p11_and_conditional(sc2)
    keys = set(cond1) | set(cond2)
    tv = 0.5 * math.fsum(abs(cond1.get(k, 0.0) - cond2.get(k, 0.0)) for k in keys)
    assert tv <= 1e-12
