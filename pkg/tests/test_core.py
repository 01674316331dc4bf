import itertools
import math

import pytest

from conftest import adj_history, walk_history
from devlab import adjacent_ones, random_walk
from devlab.core import (
    ActionSpace,
    Classification,
    EpisodeStatus,
    InvalidInputError,
    StrategyProfile,
    action_distribution,
    play_episode,
    prefix_probability,
    validated_distribution,
)
from devlab.deviations import DeviationSpec, apply_deviations
from devlab.rng import TrialStream


def test_action_distribution_honest_decay():
    goal = adjacent_ones.adjacent_ones_goal(0.1)
    # history of length 2, so period 3 is player A's turn: P(1) = mu/3
    hist = adj_history([1, 0])
    dist = action_distribution(goal.profile, 0, hist)
    assert dist[1] == pytest.approx(0.1 / 3, abs=1e-15)
    assert dist[0] == pytest.approx(1 - 0.1 / 3, abs=1e-15)


def test_action_distribution_fair_coin():
    goal = random_walk.random_walk_goal()
    assert action_distribution(goal.profile, 0, ()) == (0.5, 0.5)


def test_action_distribution_point_mass_deviation():
    goal = adjacent_ones.adjacent_ones_goal(0.1)
    always = apply_deviations(goal, [DeviationSpec(0, "always", action=1)])
    assert action_distribution(always, 0, ()) == (0.0, 1.0)


def test_action_distribution_rejects_bad_history():
    goal = adjacent_ones.adjacent_ones_goal(0.1)
    with pytest.raises(InvalidInputError):
        action_distribution(goal.profile, 0, ((0, 3),))


def test_play_episode_forced_rejection():
    goal = adjacent_ones.adjacent_ones_goal(0.1)
    actual = apply_deviations(
        goal,
        [DeviationSpec(0, "always", action=1), DeviationSpec(1, "always", action=1)],
    )
    result = play_episode(goal, actual, 100, TrialStream(1, 0))
    assert result.status is EpisodeStatus.REJECTED
    assert result.at == 2


def test_play_episode_forced_walk_acceptance():
    goal = random_walk.random_walk_goal(10)
    actual = apply_deviations(
        goal,
        [DeviationSpec(0, "always", action=-1), DeviationSpec(1, "always", action=-1)],
    )
    result = play_episode(goal, actual, 100, TrialStream(1, 0))
    assert result.status is EpisodeStatus.ACCEPTED
    assert result.at == 10


def test_play_episode_undetermined_at_horizon():
    goal = adjacent_ones.adjacent_ones_goal(0.1)
    actual = apply_deviations(
        goal,
        [DeviationSpec(0, "always", action=0), DeviationSpec(1, "always", action=0)],
    )
    result = play_episode(goal, actual, 100, TrialStream(1, 0))
    assert result.status is EpisodeStatus.UNDETERMINED
    assert result.at == 100
    assert result.in_target(goal.polarity)  # rejection-open: undetermined counts good


def _fair_pair():
    space = ActionSpace(((0, 1), (0, 1)))
    fair = lambda history: (0.5, 0.5)
    return StrategyProfile(space, (fair, fair))


def test_prefix_probability_fair_coins():
    profile = _fair_pair()
    assert prefix_probability(profile, ((0, 1),)) == pytest.approx(0.25, abs=1e-15)
    assert prefix_probability(profile, ()) == 1.0


def test_prefix_probability_deterministic_consistency():
    space = ActionSpace(((0, 1), (0, 1)))
    always_one = lambda history: (0.0, 1.0)
    fair = lambda history: (0.5, 0.5)
    profile = StrategyProfile(space, (always_one, fair))
    consistent = ((1, 0), (1, 1))
    inconsistent = ((0, 0), (1, 1))
    assert prefix_probability(profile, consistent) == pytest.approx(0.25, abs=1e-15)
    assert prefix_probability(profile, inconsistent) == 0.0


@pytest.mark.parametrize(
    "profile_fn",
    [
        lambda: adjacent_ones.adjacent_ones_goal(0.3).profile,
        lambda: random_walk.random_walk_goal(4).profile,
        _fair_pair,
    ],
)
def test_prefix_probabilities_sum_to_one(profile_fn):
    profile = profile_fn()
    n = 4
    total = math.fsum(
        prefix_probability(profile, hist)
        for hist in itertools.product(itertools.product((0, 1), repeat=2), repeat=n)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_detector_fires_at_most_once_and_replay_is_identical():
    goal = adjacent_ones.adjacent_ones_goal(0.4)
    for trial in range(50):
        first = play_episode(goal, goal.profile, 60, TrialStream(7, trial))
        replay = play_episode(goal, goal.profile, 60, TrialStream(7, trial))
        assert first == replay
        # manual scan over the full path: the stateful detector fires once
        state = goal.detector.initial_state()
        fires = 0
        for t, profile_t in enumerate(first.history):
            state, cls = goal.detector.step(state, t + 1, profile_t)
            fires += cls is not Classification.UNDETERMINED
        assert fires <= 1
        if first.status is EpisodeStatus.REJECTED:
            assert fires == 1


def test_alternate_play_marginalizes_to_mover_probabilities():
    """Off-turn point masses contribute factor 1, so the prefix probability
    equals the product of the alternating movers' bit probabilities."""
    mu = 0.25
    goal = adjacent_ones.adjacent_ones_goal(mu)
    bits = [1, 0, 0, 1, 1]
    hist = adj_history(bits)
    expected = 1.0
    for n, b in enumerate(bits, start=1):
        p1 = mu / n
        expected *= p1 if b == 1 else 1.0 - p1
    assert prefix_probability(goal.profile, hist) == pytest.approx(expected, rel=1e-12)


def test_validated_distribution_contract():
    assert validated_distribution((0.5, 0.5), 2) == (0.5, 0.5)
    renorm = validated_distribution((0.5, 0.5 + 5e-13), 2)
    assert math.fsum(renorm) == pytest.approx(1.0, abs=1e-16)
    with pytest.raises(InvalidInputError):
        validated_distribution((0.7, 0.2), 2)  # off by 0.1
    with pytest.raises(InvalidInputError):
        validated_distribution((-0.1, 1.1), 2)
    with pytest.raises(InvalidInputError):
        validated_distribution((1.0,), 2)


def test_walk_history_helper_consistency():
    goal = random_walk.random_walk_goal(3)
    hist = walk_history([-1, -1, -1])
    cls, at = goal.classify(hist)
    assert cls is Classification.ACCEPTED_HERE
    assert at == 3
