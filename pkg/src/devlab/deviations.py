"""Library of deviation strategies used as adversaries in experiments.

A deviation wraps the goal's prescribed strategy for one player and overrides
it on that player's randomizing turns only, so alternation encoding (off-turn
point masses) is preserved untouched.  Kinds:

``honest``                  the prescribed strategy itself
``always``                  point mass on one action
``first_move_then_honest``  point mass on the first own turn, honest after
``biased``                  fixed probability p on the high action (binary)
``drift_up``                mix: with probability p force the high action,
                            otherwise follow the prescribed distribution
``pin_to_band``             (walk) steer deterministically back into [lo, hi]
                            when outside, honest inside; never steps onto the
                            origin (at position 1 the +1 move is forced, since
                            reaching 0 attains the target the deviator is
                            trying to avoid)
``reflect_at_one``          (walk) forced +1 from position 1, honest elsewhere
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import random_walk
from .core import (
    GoalSpec,
    HistoryT,
    InvalidInputError,
    Strategy,
    StrategyProfile,
    validated_distribution,
)

KINDS = (
    "honest",
    "always",
    "first_move_then_honest",
    "biased",
    "drift_up",
    "pin_to_band",
    "reflect_at_one",
)


@dataclass(frozen=True)
class DeviationSpec:
    player: int
    kind: str
    action: Optional[int] = None  # label, for always / first_move_then_honest
    p: Optional[float] = None  # for biased / drift_up
    lo: Optional[int] = None  # for pin_to_band
    hi: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown deviation kind {self.kind!r}")
        if self.kind in ("always", "first_move_then_honest") and self.action is None:
            raise InvalidInputError(f"{self.kind} needs an action")
        if self.kind in ("biased", "drift_up"):
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise InvalidInputError(f"{self.kind} needs p in [0, 1]")
        if self.kind == "pin_to_band":
            if self.lo is None or self.hi is None or not 1 <= self.lo <= self.hi:
                raise InvalidInputError("pin_to_band needs 1 <= lo <= hi")


def _is_randomizing(dist: Sequence[float]) -> bool:
    return max(dist) < 1.0


def _action_index(goal: GoalSpec, player: int, label: int) -> int:
    alphabet = goal.profile.space.alphabets[player]
    try:
        return alphabet.index(label)
    except ValueError:
        raise InvalidInputError(
            f"action {label!r} not in player {player}'s alphabet {alphabet}"
        ) from None


def _require_binary(goal: GoalSpec, player: int, kind: str) -> None:
    if len(goal.profile.space.alphabets[player]) != 2:
        raise InvalidInputError(f"{kind} deviations need a binary alphabet")


def _require_walk(goal: GoalSpec, kind: str) -> None:
    if goal.meta.get("kind") != "random_walk":
        raise InvalidInputError(f"{kind} deviations apply to the random-walk goal only")


def _position_before(history: HistoryT, start: int) -> int:
    s = start
    for t, profile in enumerate(history):
        mover = 0 if (t + 1) % 2 == 1 else 1
        s += random_walk.MOVE_SPACE.alphabets[mover][profile[mover]]
    return s


def build_deviation(spec: DeviationSpec, goal: GoalSpec) -> Strategy:
    """Concrete strategy for ``spec.player``, agreeing with the prescribed
    strategy except where ``spec`` overrides it."""
    player = spec.player
    space = goal.profile.space
    if not 0 <= player < space.num_players:
        raise InvalidInputError(f"no player {player}")
    base = goal.profile.strategies[player]
    size = len(space.alphabets[player])

    if spec.kind == "honest":
        return base

    if spec.kind == "always":
        idx = _action_index(goal, player, spec.action)
        point = tuple(1.0 if k == idx else 0.0 for k in range(size))

        def always(history: HistoryT) -> Sequence[float]:
            dist = validated_distribution(base(history), size)
            return point if _is_randomizing(dist) else dist

        return always

    if spec.kind == "first_move_then_honest":
        idx = _action_index(goal, player, spec.action)
        point = tuple(1.0 if k == idx else 0.0 for k in range(size))

        def first_move(history: HistoryT) -> Sequence[float]:
            dist = validated_distribution(base(history), size)
            if not _is_randomizing(dist):
                return dist
            # Override only the player's first randomizing turn.  Turn
            # structure is length-based for every goal here, so probing the
            # truncated history is exact.
            for t in range(len(history)):
                if _is_randomizing(validated_distribution(base(history[:t]), size)):
                    return dist
            return point

        return first_move

    if spec.kind == "biased":
        _require_binary(goal, player, spec.kind)
        p = spec.p

        def biased(history: HistoryT) -> Sequence[float]:
            dist = validated_distribution(base(history), size)
            return (1.0 - p, p) if _is_randomizing(dist) else dist

        return biased

    if spec.kind == "drift_up":
        _require_binary(goal, player, spec.kind)
        p = spec.p

        def drift(history: HistoryT) -> Sequence[float]:
            dist = validated_distribution(base(history), size)
            if not _is_randomizing(dist):
                return dist
            return ((1.0 - p) * dist[0], p + (1.0 - p) * dist[1])

        return drift

    if spec.kind == "pin_to_band":
        _require_walk(goal, spec.kind)
        start = goal.meta["start"]
        lo, hi = spec.lo, spec.hi

        def pin(history: HistoryT) -> Sequence[float]:
            dist = validated_distribution(base(history), size)
            if not _is_randomizing(dist):
                return dist
            s = _position_before(history, start)
            if s < lo or s == 1:
                return (0.0, 1.0)  # +1
            if s > hi:
                return (1.0, 0.0)  # -1
            return dist

        return pin

    if spec.kind == "reflect_at_one":
        _require_walk(goal, spec.kind)
        start = goal.meta["start"]

        def reflect(history: HistoryT) -> Sequence[float]:
            dist = validated_distribution(base(history), size)
            if not _is_randomizing(dist):
                return dist
            if _position_before(history, start) == 1:
                return (0.0, 1.0)
            return dist

        return reflect

    raise InvalidInputError(f"unknown deviation kind {spec.kind!r}")


def apply_deviations(goal: GoalSpec, specs: Sequence[DeviationSpec]) -> StrategyProfile:
    """Prescribed profile with each spec's player replaced by the deviation."""
    strategies = list(goal.profile.strategies)
    seen = set()
    for spec in specs:
        if spec.player in seen:
            raise InvalidInputError(f"duplicate deviation for player {spec.player}")
        seen.add(spec.player)
        strategies[spec.player] = build_deviation(spec, goal)
    return StrategyProfile(goal.profile.space, tuple(strategies))
