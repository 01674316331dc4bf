"""Model primitives: players, histories, behavior strategies, goals, episodes.

A history is a tuple of action profiles; each profile holds one action index
per player.  A behavior strategy for one player is a callable mapping a
history to a probability vector over that player's alphabet.  Alternating-move
games are encoded in the simultaneous model by giving the off-turn player an
exact point mass on a designated null action (the first alphabet entry), so a
single simulation/enumeration code path serves both conventions.

Goals pair a prescribed profile with a prefix detector.  Detectors are
three-valued and *stable*: once a prefix is classified rejected (or accepted),
no extension is classified again, so the minimal rejecting prefixes form a
prefix-free set.  The goal's polarity states which side of the target set is
prefix-detectable, and fixes how undetermined-at-horizon episodes are counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Protocol, Sequence, Tuple

from .rng import TrialStream, sample_index

HistoryT = Tuple[Tuple[int, ...], ...]
Strategy = Callable[[HistoryT], Sequence[float]]

DIST_TOL = 1e-12


class InvalidInputError(ValueError):
    """Malformed history, distribution, or parameter."""


class Classification(Enum):
    UNDETERMINED = "undetermined"
    REJECTED_HERE = "rejected_here"
    ACCEPTED_HERE = "accepted_here"


class Polarity(Enum):
    """Which side of the target set is open (detectable on finite prefixes)."""

    REJECTION_OPEN = "rejection_open"  # leaving the target is detectable
    ACCEPTANCE_OPEN = "acceptance_open"  # reaching the target is detectable


class EpisodeStatus(Enum):
    REJECTED = "rejected"
    ACCEPTED = "accepted"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class ActionSpace:
    """Per-player finite action alphabets (labels; indices are the wire form)."""

    alphabets: Tuple[Tuple[Any, ...], ...]

    def __post_init__(self):
        if len(self.alphabets) < 2:
            raise InvalidInputError("need at least two players")
        for i, alpha in enumerate(self.alphabets):
            if len(alpha) == 0:
                raise InvalidInputError(f"player {i} has an empty alphabet")

    @property
    def num_players(self) -> int:
        return len(self.alphabets)

    def validate_history(self, history: HistoryT) -> None:
        n_players = self.num_players
        for t, profile in enumerate(history):
            if len(profile) != n_players:
                raise InvalidInputError(
                    f"period {t + 1}: profile has {len(profile)} entries, expected {n_players}"
                )
            for i, a in enumerate(profile):
                if not 0 <= a < len(self.alphabets[i]):
                    raise InvalidInputError(
                        f"period {t + 1}: action index {a} out of range for player {i}"
                    )


class Detector(Protocol):
    """Incremental prefix classifier; state is a small immutable value."""

    def initial_state(self) -> Any: ...

    def step(self, state: Any, period: int, profile: Tuple[int, ...]) -> tuple[Any, Classification]: ...


@dataclass(frozen=True)
class StrategyProfile:
    space: ActionSpace
    strategies: Tuple[Strategy, ...]

    def __post_init__(self):
        if len(self.strategies) != self.space.num_players:
            raise InvalidInputError("one strategy per player required")


@dataclass(frozen=True)
class GoalSpec:
    """Prescribed profile + prefix-detectable target set."""

    name: str
    profile: StrategyProfile
    detector: Detector
    polarity: Polarity
    meta: Mapping[str, Any] = field(default_factory=dict)

    def classify(self, prefix: HistoryT) -> tuple[Classification, int]:
        """First detector firing along ``prefix``: (classification, prefix length)."""
        state = self.detector.initial_state()
        for t, profile in enumerate(prefix):
            state, cls = self.detector.step(state, t + 1, profile)
            if cls is not Classification.UNDETERMINED:
                return cls, t + 1
        return Classification.UNDETERMINED, len(prefix)


@dataclass(frozen=True)
class EpisodeResult:
    history: HistoryT
    status: EpisodeStatus
    at: int  # minimal firing prefix length, or the horizon if undetermined

    def in_target(self, polarity: Polarity) -> bool:
        """Truncation semantics: undetermined counts for the closed side."""
        if self.status is EpisodeStatus.ACCEPTED:
            return True
        if self.status is EpisodeStatus.REJECTED:
            return False
        return polarity is Polarity.REJECTION_OPEN


def validated_distribution(raw: Sequence[float], size: int) -> Tuple[float, ...]:
    """Check and renormalize a strategy output.

    Renormalization is applied only within DIST_TOL of 1; anything further off
    is rejected rather than silently fixed.
    """
    if len(raw) != size:
        raise InvalidInputError(f"distribution has {len(raw)} entries, expected {size}")
    total = 0.0
    for p in raw:
        if p < 0.0:
            raise InvalidInputError(f"negative probability {p}")
        total += p
    if abs(total - 1.0) > DIST_TOL:
        raise InvalidInputError(f"probabilities sum to {total!r}, not 1")
    if total != 1.0:
        return tuple(p / total for p in raw)
    return tuple(raw)


def action_distribution(profile: StrategyProfile, player: int, history: HistoryT) -> Tuple[float, ...]:
    """Validated action distribution of one player after ``history``."""
    if not 0 <= player < profile.space.num_players:
        raise InvalidInputError(f"no player {player}")
    profile.space.validate_history(history)
    raw = profile.strategies[player](history)
    return validated_distribution(raw, len(profile.space.alphabets[player]))


def prefix_probability(profile: StrategyProfile, prefix: HistoryT) -> float:
    """Probability that ``prefix`` is generated under ``profile``."""
    profile.space.validate_history(prefix)
    space = profile.space
    prob = 1.0
    for t in range(len(prefix)):
        head = prefix[:t]
        for i in range(space.num_players):
            dist = validated_distribution(profile.strategies[i](head), len(space.alphabets[i]))
            prob *= dist[prefix[t][i]]
            if prob == 0.0:
                return 0.0
    return prob


def play_episode(
    goal: GoalSpec,
    actual: StrategyProfile,
    horizon: int,
    stream: TrialStream,
) -> EpisodeResult:
    """Simulate one episode under ``actual``, stopping at the first detector
    firing or at the horizon.

    Players are sampled in index order within each period; point-mass turns
    consume no randomness (see :mod:`devlab.rng`).
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    if actual.space is not goal.profile.space and actual.space != goal.profile.space:
        raise InvalidInputError("actual profile is defined on a different action space")
    space = actual.space
    # Strategies see the live history list to avoid O(n^2) tuple copies; they
    # are pure consumers and must not mutate it.
    history: list[Tuple[int, ...]] = []
    state = goal.detector.initial_state()
    for n in range(1, horizon + 1):
        profile_t = []
        for i in range(space.num_players):
            dist = validated_distribution(actual.strategies[i](history), len(space.alphabets[i]))
            profile_t.append(sample_index(dist, stream))
        profile_t = tuple(profile_t)
        history.append(profile_t)
        state, cls = goal.detector.step(state, n, profile_t)
        if cls is Classification.REJECTED_HERE:
            return EpisodeResult(tuple(history), EpisodeStatus.REJECTED, n)
        if cls is Classification.ACCEPTED_HERE:
            return EpisodeResult(tuple(history), EpisodeStatus.ACCEPTED, n)
    return EpisodeResult(tuple(history), EpisodeStatus.UNDETERMINED, horizon)
