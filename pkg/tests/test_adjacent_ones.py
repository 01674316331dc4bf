import math

import pytest

from conftest import adj_history
from devlab import adjacent_ones as ao
from devlab import exact_oracle as oracle
from devlab.core import Classification, EpisodeStatus, InvalidInputError


def test_honest_strategy_examples():
    a = ao.honest_strategy(0, 0.1)
    b = ao.honest_strategy(1, 0.1)
    assert a(())[1] == pytest.approx(0.1, abs=1e-15)  # period 1, A randomizes
    assert b(adj_history([1, 0, 0]))[1] == pytest.approx(0.025, abs=1e-15)  # period 4
    assert a(adj_history([1]))[0] == 1.0  # period 2 is off-turn for A
    assert a(adj_history([1, 0]))[1] == pytest.approx(0.1 / 3, abs=1e-15)


def test_detector_examples():
    goal = ao.adjacent_ones_goal(0.1)
    assert goal.classify(adj_history([1, 1])) == (Classification.REJECTED_HERE, 2)
    assert goal.classify(adj_history([1, 0, 1, 1])) == (Classification.REJECTED_HERE, 4)
    # the 1,1 straddles an even-odd boundary, which does not reject
    cls, _ = goal.classify(adj_history([0, 1, 1, 0]))
    assert cls is Classification.UNDETERMINED


def test_weighted_sum_and_blame_examples():
    # rejection at period 2 with no other odd ones: sum = mu/2 <= mu -> B
    assert ao.blame(adj_history([1, 1]), 0.1) == ao.PLAYER_B
    # odd-period ones at periods 1,3,5,7, rejection at period 8:
    bits = [1, 0, 1, 0, 1, 0, 1, 1]
    wsum = ao.weighted_sum(bits, 0.1)
    assert wsum == pytest.approx(0.1 * (1 / 2 + 1 / 4 + 1 / 6 + 1 / 8), rel=1e-12)
    assert wsum > 0.1
    assert ao.blame(adj_history(bits), 0.1) == ao.PLAYER_A
    # boundary: exact equality is not a strict excess, so B is blamed
    assert ao.blame_from_sum(0.1, 0.1) == ao.PLAYER_B


def test_blame_requires_rejected_history():
    with pytest.raises(InvalidInputError):
        ao.blame(adj_history([0, 0, 1, 0]), 0.1)


def test_prefix_vs_full_variant():
    # rejected at period 2; a later odd one only counts in the full variant
    bits = [1, 1, 1, 0]
    assert ao.weighted_sum(bits, 0.1, upto_period=2) == pytest.approx(0.05, abs=1e-15)
    assert ao.weighted_sum(bits, 0.1) == pytest.approx(0.05 + 0.025, abs=1e-15)
    assert ao.blame(adj_history(bits), 0.1, variant="prefix") == ao.PLAYER_B
    assert ao.blame(adj_history(bits), 0.1, variant="full") == ao.PLAYER_B


def test_miss_probability_zero_mu():
    assert ao.miss_probability(0.0) == 0.0
    assert ao.miss_probability_partial(0.0, 50) == 0.0


def _rejection_probability_by_enumeration(mu, horizon):
    goal = ao.adjacent_ones_goal(mu)
    return oracle.exact_event_probability(
        goal.profile,
        goal,
        horizon,
        lambda status, at, hist: status is EpisodeStatus.REJECTED,
        period_only=True,
    )


@pytest.mark.parametrize("rounds", [2, 5, 10])
def test_partial_series_matches_enumeration(rounds):
    p_enum = _rejection_probability_by_enumeration(0.1, 2 * rounds)
    assert abs(p_enum - ao.miss_probability_partial(0.1, rounds)) < 1e-12


def test_full_series_pinned_by_enumeration_plus_tail():
    """Independent derivation of eps(0.1): exact rejection probability over
    the first 10 rounds by tree enumeration, closed with the analytic tail
    (survival after round 10 times the remaining failure mass)."""
    mu, rounds = 0.1, 10
    p_enum = _rejection_probability_by_enumeration(mu, 2 * rounds)
    survive = 1.0
    for k in range(rounds):
        survive *= 1.0 - ao.round_term(mu, k)
    log_rest = math.fsum(
        math.log1p(-ao.round_term(mu, k)) for k in range(rounds, 1 << 14)
    )
    tail = mu * mu * ao._alternating_tail(1 << 14)
    independent = p_enum + survive * (1.0 - math.exp(log_rest - tail))
    value = ao.miss_probability(mu, 1e-12)
    assert value == pytest.approx(independent, abs=1e-12)
    # frozen regression value from the derivation above
    assert value == pytest.approx(0.006920388878103423, abs=2e-12)


def test_theta_mu_squared_scaling():
    ratios = [ao.miss_probability(mu, 1e-12) / mu**2 for mu in (0.05, 0.1, 0.2)]
    assert max(ratios) / min(ratios) < 1.10


def test_expected_weighted_sum_identity():
    """Exact expectation of the full-variant statistic over 6 rounds equals
    the analytic sum of mu^2/((2k+1)(2k+2)), via detector-free enumeration."""
    mu, rounds = 0.1, 6
    goal = ao.adjacent_ones_goal(mu)
    expected = oracle.exact_expectation(
        goal.profile,
        None,
        2 * rounds,
        lambda status, at, hist: ao.weighted_sum(ao.realized_bits(hist), mu),
        period_only=True,
    )
    assert expected == pytest.approx(ao.expected_weighted_sum_partial(mu, rounds), abs=1e-12)
    assert ao.expected_weighted_sum_partial(mu, 10**6) < mu**2


def test_markov_bound_exact_small_horizon():
    """P(statistic > mu) < mu under honest A, exactly, for any B strategy;
    checked by detector-free enumeration (the full-variant statistic needs
    post-rejection bits)."""
    from devlab.deviations import DeviationSpec, apply_deviations

    mu = 0.2
    goal = ao.adjacent_ones_goal(mu)
    for b_spec in (
        [],
        [DeviationSpec(1, "always", action=1)],
        [DeviationSpec(1, "biased", p=0.9)],
    ):
        profile = apply_deviations(goal, b_spec)
        p_exceed = oracle.exact_event_probability(
            profile,
            None,
            12,
            lambda status, at, hist: ao.weighted_sum(ao.realized_bits(hist), mu) > mu,
        )
        assert p_exceed < mu


def test_markov_bound_smoke():
    """Honest A implies P(statistic > mu) < mu, for any B; Monte Carlo check
    with B always playing 1."""
    from devlab import montecarlo as mc

    cfg = mc.ExperimentConfig.from_dict(
        {
            "goal": {"id": "adjacent_ones", "mu": 0.1},
            "horizon": 2000,
            "trials": 20000,
            "seed": 424242,
            "actual": {"deviations": [{"player": 1, "kind": "always", "action": 1}]},
            "blame": {"id": "adjacent_ones_threshold", "variant": "full"},
        }
    )
    report = mc.run_experiment(cfg, threads=2)
    est = report.estimate("miss_and_blame_a")
    assert est["wilson_lo"] <= 0.1


def test_mu_validation():
    with pytest.raises(InvalidInputError):
        ao.honest_strategy(0, 0.0)
    with pytest.raises(InvalidInputError):
        ao.honest_strategy(0, 1.5)
    with pytest.raises(InvalidInputError):
        ao.miss_probability(-0.1)
