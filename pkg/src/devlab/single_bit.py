"""One-shot fixture game: each player picks a single bit, supposed to be 1
with probability mu; the outcome is bad iff both pick 1.  Used to exercise
the tightness of the blame-error bounds on the smallest possible instance.
"""

from __future__ import annotations

from .core import (
    ActionSpace,
    Classification,
    GoalSpec,
    InvalidInputError,
    Polarity,
    Strategy,
    StrategyProfile,
)

BIT_SPACE = ActionSpace(((0, 1), (0, 1)))


def honest_strategy(mu: float) -> Strategy:
    if not 0.0 < mu < 1.0:
        raise InvalidInputError(f"mu must be in (0, 1), got {mu}")
    return lambda history: (1.0 - mu, mu)


class BothOnesDetector:
    def initial_state(self):
        return False

    def step(self, state, period, profile):
        if state:
            return True, Classification.UNDETERMINED
        if period == 1:
            if profile == (1, 1):
                return True, Classification.REJECTED_HERE
            return True, Classification.ACCEPTED_HERE
        return True, Classification.UNDETERMINED


def single_bit_goal(mu: float) -> GoalSpec:
    strat = honest_strategy(mu)
    return GoalSpec(
        name="single_bit",
        profile=StrategyProfile(BIT_SPACE, (strat, strat)),
        detector=BothOnesDetector(),
        polarity=Polarity.REJECTION_OPEN,
        meta={"kind": "single_bit", "mu": mu},
    )
