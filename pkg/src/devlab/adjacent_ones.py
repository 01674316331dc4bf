"""Adjacent-ones goal: decaying-probability bit strategies, rejection
detector, miss-probability series, and the explicit threshold blame rule.

Player A (index 0) chooses the odd-period bits, player B (index 1) the even
ones; the mover is supposed to play 1 with probability mu/n in period n.  A
realization is rejected as soon as periods 2k+1 and 2k+2 both carry bit 1.
The blame statistic is the sum of mu/(2k+2) over odd periods where the
realized bit was 1: above mu blames A, otherwise B.

Two variants of the statistic are exposed: ``prefix`` stops at the rejection
point (all that is observable if simulation stops there), while ``full`` keeps
counting to the horizon, closer to the rule's definition on whole
realizations.  Experiments default to ``full``.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .core import (
    ActionSpace,
    Classification,
    GoalSpec,
    HistoryT,
    InvalidInputError,
    Polarity,
    Strategy,
    StrategyProfile,
)

PLAYER_A = 0
PLAYER_B = 1

BIT_SPACE = ActionSpace(((0, 1), (0, 1)))


def _check_mu(mu: float) -> None:
    if not 0.0 < mu <= 1.0:
        raise InvalidInputError(f"mu must be in (0, 1], got {mu}")


def honest_strategy(player: int, mu: float) -> Strategy:
    """Play 1 with probability mu/n on own turns, null bit 0 off turn."""
    _check_mu(mu)

    def strategy(history: HistoryT) -> Sequence[float]:
        n = len(history) + 1
        own = (n % 2 == 1) if player == PLAYER_A else (n % 2 == 0)
        if not own:
            return (1.0, 0.0)
        p = mu / n
        return (1.0 - p, p)

    return strategy


class AdjacentOnesDetector:
    """Fires REJECTED_HERE at the first even period completing a 1,1 round.

    State is the previous odd bit, or None once fired (stability: a fired
    detector never fires again along the same path).
    """

    def initial_state(self):
        return 0

    def step(self, state, period: int, profile):
        if state is None:
            return None, Classification.UNDETERMINED
        bit = profile[PLAYER_A] if period % 2 == 1 else profile[PLAYER_B]
        if period % 2 == 1:
            return bit, Classification.UNDETERMINED
        if state == 1 and bit == 1:
            return None, Classification.REJECTED_HERE
        return 0, Classification.UNDETERMINED


def adjacent_ones_goal(mu: float) -> GoalSpec:
    profile = StrategyProfile(
        BIT_SPACE, (honest_strategy(PLAYER_A, mu), honest_strategy(PLAYER_B, mu))
    )
    return GoalSpec(
        name="adjacent_ones",
        profile=profile,
        detector=AdjacentOnesDetector(),
        polarity=Polarity.REJECTION_OPEN,
        meta={"kind": "adjacent_ones", "mu": mu},
    )


def realized_bits(history: HistoryT) -> list[int]:
    """Mover bits: odd periods from player A, even from player B."""
    return [
        profile[PLAYER_A] if (t + 1) % 2 == 1 else profile[PLAYER_B]
        for t, profile in enumerate(history)
    ]


def rejection_period(bits: Sequence[int]) -> int | None:
    """First even period 2k+2 with bits 2k+1 and 2k+2 both 1, or None."""
    for k in range(len(bits) // 2):
        if bits[2 * k] == 1 and bits[2 * k + 1] == 1:
            return 2 * k + 2
    return None


def weighted_sum(bits: Sequence[int], mu: float, upto_period: int | None = None) -> float:
    """Sum of mu/(2k+2) over odd periods 2k+1 <= upto_period with bit 1.

    ``upto_period=None`` uses the whole sequence (the ``full`` variant);
    passing the rejection period gives the ``prefix`` variant.
    """
    limit = len(bits) if upto_period is None else min(upto_period, len(bits))
    total = 0.0
    for k in range(limit // 2 + limit % 2):
        if bits[2 * k] == 1:
            total += mu / (2 * k + 2)
    return total


def blame_from_sum(wsum: float, mu: float) -> int:
    """A is blamed only on strict excess; ties go to B."""
    return PLAYER_A if wsum > mu else PLAYER_B


def blame(history: HistoryT, mu: float, variant: str = "full") -> int:
    """Threshold blame on a rejected realization.

    Raises if the history was never rejected (the rule is only defined
    outside the target set).
    """
    _check_mu(mu)
    bits = realized_bits(history)
    rejected_at = rejection_period(bits)
    if rejected_at is None:
        raise InvalidInputError("blame is defined only on rejected realizations")
    if variant == "full":
        wsum = weighted_sum(bits, mu)
    elif variant == "prefix":
        wsum = weighted_sum(bits, mu, upto_period=rejected_at)
    else:
        raise InvalidInputError(f"unknown variant {variant!r}")
    return blame_from_sum(wsum, mu)


def round_term(mu: float, k: int) -> float:
    """Probability that round k (periods 2k+1, 2k+2) is the first 1,1 round,
    conditioned on no earlier one: mu^2 / ((2k+1)(2k+2))."""
    return mu * mu / ((2 * k + 1) * (2 * k + 2))


def miss_probability_partial(mu: float, rounds: int) -> float:
    """Probability of rejection within the first ``rounds`` rounds (periods
    2*rounds), i.e. the leading terms of the miss-probability series."""
    if not 0.0 <= mu <= 1.0:
        raise InvalidInputError(f"mu must be in [0, 1], got {mu}")
    survive = 1.0
    total = 0.0
    for k in range(rounds):
        t = round_term(mu, k)
        total += survive * t
        survive *= 1.0 - t
    return total


def _alternating_tail(k_from: int) -> float:
    # sum_{k>=K} [1/(2k+1) - 1/(2k+2)]  ==  ln 2 - sum_{m=1}^{2K} (-1)^(m+1)/m
    partial = math.fsum(
        (1.0 / m if m % 2 == 1 else -1.0 / m) for m in range(1, 2 * k_from + 1)
    )
    return math.log(2.0) - partial


def miss_probability(mu: float, tolerance: float = 1e-12) -> float:
    """Full miss-probability series, accurate to ``tolerance``.

    The series telescopes to 1 - prod_k (1 - t_k); we take the product
    explicitly up to K and close it with the exact first-order tail
    sum_{k>=K} t_k = mu^2 (ln 2 - H^alt_{2K}).  The neglected second-order
    remainder is below mu^4/(48 K^3), and K is grown until that clears half
    the tolerance.
    """
    if not 0.0 <= mu <= 1.0:
        raise InvalidInputError(f"mu must be in [0, 1], got {mu}")
    if tolerance <= 0.0:
        raise InvalidInputError("tolerance must be positive")
    if mu == 0.0:
        return 0.0
    k_terms = 512
    while mu**4 / (48.0 * k_terms**3) > 0.5 * tolerance:
        k_terms *= 2
    log_survive = math.fsum(math.log1p(-round_term(mu, k)) for k in range(k_terms))
    tail = mu * mu * _alternating_tail(k_terms)
    return 1.0 - math.exp(log_survive - tail)


def expected_weighted_sum_partial(mu: float, rounds: int) -> float:
    """E of the blame statistic restricted to the first ``rounds`` rounds
    under honest play: sum_k mu^2/((2k+1)(2k+2))  (< mu^2 in the limit)."""
    return math.fsum(round_term(mu, k) for k in range(rounds))
