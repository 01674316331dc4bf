"""Random-walk goal: alternating fair-coin moves from a positive start, the
origin-reaching target, walk statistics, and the four-step blame algorithm.

Player A (index 0) moves in odd periods, player B (index 1) in even ones.
The walk starts at ``start`` (default 10); the target is reached at the first
visit to the origin, so an episode is "bad" when the horizon passes with the
walk still positive.

The blame algorithm's limit tests (an iterated-logarithm limsup, divergence
of two series) are replaced by finite-horizon surrogates: running-extreme
statistics compared against thresholds calibrated on honest play (see
:func:`devlab.montecarlo.calibrate_thresholds`).  Burn-in ``n0`` keeps the
iterated logarithm positive and suppresses the first noisy terms.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

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

MOVE_SPACE = ActionSpace(((-1, 1), (-1, 1)))
DEFAULT_START = 10


def honest_strategy(player: int) -> Strategy:
    """Fair coin on own turns, null move (-1 point mass) off turn."""

    def strategy(history: HistoryT) -> Sequence[float]:
        n = len(history) + 1
        own = (n % 2 == 1) if player == PLAYER_A else (n % 2 == 0)
        return (0.5, 0.5) if own else (1.0, 0.0)

    return strategy


class OriginDetector:
    """Fires ACCEPTED_HERE at the first period where the walk hits 0."""

    def __init__(self, start: int):
        self.start = start

    def initial_state(self):
        return self.start

    def step(self, state, period: int, profile):
        if state is None:
            return None, Classification.UNDETERMINED
        mover = PLAYER_A if period % 2 == 1 else PLAYER_B
        s = state + MOVE_SPACE.alphabets[mover][profile[mover]]
        if s == 0:
            return None, Classification.ACCEPTED_HERE
        return s, Classification.UNDETERMINED


def random_walk_goal(start: int = DEFAULT_START) -> GoalSpec:
    if start < 1:
        raise InvalidInputError(f"start must be >= 1, got {start}")
    profile = StrategyProfile(
        MOVE_SPACE, (honest_strategy(PLAYER_A), honest_strategy(PLAYER_B))
    )
    return GoalSpec(
        name="random_walk",
        profile=profile,
        detector=OriginDetector(start),
        polarity=Polarity.ACCEPTANCE_OPEN,
        meta={"kind": "random_walk", "start": start},
    )


@dataclass(frozen=True)
class SurrogateThresholds:
    """Finite-horizon stand-ins for the blame algorithm's limit tests."""

    theta1: float
    theta2: float
    theta3: float
    n0: int = 100

    def __post_init__(self):
        if self.n0 < 3:
            raise InvalidInputError("n0 must be >= 3 (log log n must be positive)")
        if self.theta1 <= 0 or self.theta2 <= 0:
            raise InvalidInputError("theta1 and theta2 must be positive")


@dataclass(frozen=True)
class WalkTrace:
    """One player's moves per round, plus the start position."""

    a_moves: np.ndarray  # +-1, A's moves in order
    b_moves: np.ndarray
    start: int = DEFAULT_START

    def __post_init__(self):
        if len(self.a_moves) != len(self.b_moves):
            raise InvalidInputError("need whole A,B rounds (equal move counts)")

    @property
    def rounds(self) -> int:
        return len(self.a_moves)

    def positions(self) -> np.ndarray:
        """s_0 .. s_2M with s_{2n-1} = start + A_n + B_{n-1}."""
        moves = np.empty(2 * self.rounds, dtype=np.int64)
        moves[0::2] = self.a_moves
        moves[1::2] = self.b_moves
        out = np.empty(2 * self.rounds + 1, dtype=np.int64)
        out[0] = self.start
        np.cumsum(moves, out=out[1:])
        out[1:] += self.start
        return out

    def hit_origin(self) -> bool:
        return bool((self.positions() == 0).any())


def trace_from_history(history: HistoryT, start: int = DEFAULT_START) -> WalkTrace:
    labels = [
        MOVE_SPACE.alphabets[PLAYER_A if (t + 1) % 2 == 1 else PLAYER_B][
            profile[PLAYER_A if (t + 1) % 2 == 1 else PLAYER_B]
        ]
        for t, profile in enumerate(history)
    ]
    if len(labels) % 2 == 1:
        labels = labels[:-1]
    arr = np.asarray(labels, dtype=np.int64)
    return WalkTrace(arr[0::2], arr[1::2], start)


# -- weight tables -----------------------------------------------------------
# Shared by the reference statistics below and by both kernel backends, so
# transcendental evaluation happens in exactly one place.


@functools.lru_cache(maxsize=8)
def weight_tables(rounds: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(w_lil, w_series, w_odd, w_even), each indexed 0..rounds.

    w_lil[n]    = 1 / (sqrt(n) log log n)         n >= 3
    w_series[m] = 1 / (sqrt(m) (log m)^(3/4))     m >= 2
    w_odd[n]    = 1 / (2n log 2n)                 n >= 1
    w_even[n]   = 1 / ((2n-1) log(2n-1))          n >= 2
    Entries below each validity bound are zeroed.
    """
    n = np.arange(rounds + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        w_lil = 1.0 / (np.sqrt(n) * np.log(np.log(n)))
        w_series = 1.0 / (np.sqrt(n) * np.log(n) ** 0.75)
        w_odd = 1.0 / (2.0 * n * np.log(2.0 * n))
        w_even = 1.0 / ((2.0 * n - 1.0) * np.log(2.0 * n - 1.0))
    w_lil[:3] = 0.0
    w_series[:2] = 0.0
    w_odd[:1] = 0.0
    w_even[:2] = 0.0
    return w_lil, w_series, w_odd, w_even


# -- statistics --------------------------------------------------------------


def step1_stat(moves: Sequence[int], n0: int) -> float:
    """Running-max iterated-logarithm ratio of one player's partial sums:
    max over n in [n0, N] of X_n / (sqrt(n) log log n)."""
    moves = np.asarray(moves, dtype=np.float64)
    m = len(moves)
    if m < n0:
        raise InvalidInputError(f"need at least n0={n0} moves, got {m}")
    w = weight_tables(m)[0]
    partial = np.cumsum(moves)
    return float(np.max(partial[n0 - 1 :] * w[n0:]))


def step2_stat(moves: Sequence[int], n0: int) -> float:
    """Running-max magnitude of the weighted series sum_{m=2}^n x_m /
    (sqrt(m) (log m)^(3/4)), maximized over n in [n0, N]."""
    moves = np.asarray(moves, dtype=np.float64)
    m = len(moves)
    if m < n0:
        raise InvalidInputError(f"need at least n0={n0} moves, got {m}")
    w = weight_tables(m)[1]
    series = np.cumsum(moves * w[1 : m + 1])
    return float(np.max(np.abs(series[n0 - 1 :])))


def step3_stats(trace: WalkTrace) -> Tuple[float, float]:
    """Final values of the two position-squared drift series.

    t_odd  = sum_{n=1}^{M-1} (s_{2n+1}^2 - s_{2n}^2) / (2n log 2n)
    t_even = sum_{n=2}^{M}   (s_{2n}^2 - s_{2n-1}^2) / ((2n-1) log(2n-1))
    Sums are accumulated sequentially (cumsum) to match the streaming kernels
    bit for bit.
    """
    m = trace.rounds
    if 2 * m < 4:
        raise InvalidInputError("trace too short for the drift statistics")
    _, _, w_odd, w_even = weight_tables(m)
    sq = trace.positions().astype(np.float64) ** 2
    odd_terms = (sq[3 : 2 * m : 2] - sq[2 : 2 * m - 1 : 2]) * w_odd[1:m]
    even_terms = (sq[4 : 2 * m + 1 : 2] - sq[3 : 2 * m : 2]) * w_even[2 : m + 1]
    t_odd = float(np.cumsum(odd_terms)[-1]) if len(odd_terms) else 0.0
    t_even = float(np.cumsum(even_terms)[-1]) if len(even_terms) else 0.0
    return t_odd, t_even


@dataclass(frozen=True)
class StepStats:
    step1_a: float
    step1_b: float
    step2_a: float
    step2_b: float
    t_odd: float
    t_even: float


def trace_statistics(trace: WalkTrace, n0: int) -> StepStats:
    t_odd, t_even = step3_stats(trace)
    return StepStats(
        step1_a=step1_stat(trace.a_moves, n0),
        step1_b=step1_stat(trace.b_moves, n0),
        step2_a=step2_stat(trace.a_moves, n0),
        step2_b=step2_stat(trace.b_moves, n0),
        t_odd=t_odd,
        t_even=t_even,
    )


@dataclass(frozen=True)
class StepDiagnostics:
    stats: StepStats
    decided_at_step: int
    blamed: int


def blame_from_stats(stats: StepStats, thresholds: SurrogateThresholds) -> StepDiagnostics:
    """Steps in order; note step 3 blames B on the odd-indexed series first,
    and step 4 defaults to A."""
    if stats.step1_a > thresholds.theta1:
        return StepDiagnostics(stats, 1, PLAYER_A)
    if stats.step1_b > thresholds.theta1:
        return StepDiagnostics(stats, 1, PLAYER_B)
    if stats.step2_a > thresholds.theta2:
        return StepDiagnostics(stats, 2, PLAYER_A)
    if stats.step2_b > thresholds.theta2:
        return StepDiagnostics(stats, 2, PLAYER_B)
    if stats.t_odd > thresholds.theta3:
        return StepDiagnostics(stats, 3, PLAYER_B)
    if stats.t_even > thresholds.theta3:
        return StepDiagnostics(stats, 3, PLAYER_A)
    return StepDiagnostics(stats, 4, PLAYER_A)


def blame(trace: WalkTrace, thresholds: SurrogateThresholds) -> StepDiagnostics:
    """Blame on a bad realization; raises if the walk reached the origin."""
    if trace.hit_origin():
        raise InvalidInputError("blame is defined only when the origin was never reached")
    return blame_from_stats(trace_statistics(trace, thresholds.n0), thresholds)
