"""Per-player likelihood ratios and the max-likelihood blame rule.

The ratio of a candidate deviation against the prescribed strategy is
accumulated in the log domain (raw products underflow long before horizon
10^6).  Zero-probability factors are tracked as explicit sentinels with the
conventions 0/0 = 1 and c/0 = infinity for c > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .core import HistoryT, InvalidInputError, Strategy, StrategyProfile, validated_distribution


@dataclass(frozen=True)
class LogLikelihoodRatio:
    """Extended-real log ratio.

    ``value`` is +inf iff some factor had prescribed-probability 0 with
    deviation-probability > 0, and -inf iff some factor had
    deviation-probability 0 with prescribed-probability > 0.  If both kinds of
    factor occur the prefix is unreachable under either measure; we resolve to
    -inf (a deviation that assigns probability 0 to the observation cannot be
    favored) and set ``conflict``.
    """

    value: float
    conflict: bool = False


class LLRAccumulator:
    """Streaming accumulator: one period's factor at a time."""

    __slots__ = ("log_sum", "has_zero", "has_inf")

    def __init__(self):
        self.log_sum = 0.0
        self.has_zero = False
        self.has_inf = False

    def add(self, p_dev: float, p_base: float) -> None:
        if p_dev > 0.0 and p_base > 0.0:
            self.log_sum += math.log(p_dev / p_base)
        elif p_dev == 0.0 and p_base == 0.0:
            pass  # 0/0 = 1 contributes log 1
        elif p_dev == 0.0:
            self.has_zero = True
        else:
            self.has_inf = True

    def result(self) -> LogLikelihoodRatio:
        if self.has_zero:
            return LogLikelihoodRatio(-math.inf, conflict=self.has_inf)
        if self.has_inf:
            return LogLikelihoodRatio(math.inf)
        return LogLikelihoodRatio(self.log_sum)


@dataclass(frozen=True)
class BlameVerdict:
    blamed: int
    per_player_llr: Tuple[LogLikelihoodRatio, ...]
    tie: bool


def log_likelihood_ratio(
    deviation: Strategy,
    baseline: Strategy,
    player: int,
    prefix: HistoryT,
    profile: StrategyProfile,
) -> LogLikelihoodRatio:
    """Log of the deviation/baseline likelihood ratio of ``player``'s realized
    actions along ``prefix``.  ``profile`` supplies the action space.
    """
    space = profile.space
    space.validate_history(prefix)
    size = len(space.alphabets[player])
    acc = LLRAccumulator()
    for t in range(len(prefix)):
        head = prefix[:t]
        a = prefix[t][player]
        acc.add(
            validated_distribution(deviation(head), size)[a],
            validated_distribution(baseline(head), size)[a],
        )
    return acc.result()


def blame_from_llrs(llrs: Sequence[LogLikelihoodRatio]) -> BlameVerdict:
    """Argmax with lowest-index tie-break (the verdict depends only on LLR
    differences, so adding a common finite constant changes nothing)."""
    values = [l.value for l in llrs]
    best = max(values)
    blamed = values.index(best)
    tie = values.count(best) > 1
    return BlameVerdict(blamed, tuple(llrs), tie)


def max_likelihood_blame(
    hypothesis: StrategyProfile,
    baseline: StrategyProfile,
    rejected_prefix: HistoryT,
) -> BlameVerdict:
    """Blame the player whose hypothesized deviation best explains the
    rejected prefix.  The caller supplies one candidate deviation per player;
    the rule never pretends to know the true deviation.
    """
    if hypothesis.space != baseline.space:
        raise InvalidInputError("hypothesis and baseline use different action spaces")
    llrs = [
        log_likelihood_ratio(
            hypothesis.strategies[i], baseline.strategies[i], i, rejected_prefix, baseline
        )
        for i in range(baseline.space.num_players)
    ]
    return blame_from_llrs(llrs)


def testability_bound(num_players: int, epsilon: float) -> float:
    """Error level guaranteed for any goal missed with probability < epsilon."""
    if num_players < 2:
        raise InvalidInputError("need at least two players")
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidInputError("epsilon must be a probability")
    return 2.0 * math.sqrt((num_players - 1) * epsilon)


def guarantee_bound(num_players: int, epsilon: float) -> float:
    """The sharper single-response bound sqrt((|I|-1) epsilon)."""
    return 0.5 * testability_bound(num_players, epsilon)
