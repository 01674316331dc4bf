"""Exhaustive enumeration over all histories of small instances.

Walks the full product tree (pruning zero-probability branches), classifying
each path with the goal detector.  This is the independent oracle that pins
expected values for the simulation side: event probabilities, expectations,
conditional distributions, and the blame-bound inequality chain.

All accumulation is Kahan-compensated; traversal order is lexicographic in
action indices, so results are bit-stable.  A node budget guards against
accidentally enormous trees (resource error, not a crash).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .core import (
    Classification,
    EpisodeStatus,
    GoalSpec,
    InvalidInputError,
    Polarity,
    StrategyProfile,
)
from .likelihood import LLRAccumulator, blame_from_llrs

NODE_BUDGET = 1 << 24


class BudgetExceededError(RuntimeError):
    """Instance larger than the configured enumeration budget."""


class Kahan:
    """Compensated running sum."""

    __slots__ = ("total", "_c")

    def __init__(self):
        self.total = 0.0
        self._c = 0.0

    def add(self, x: float) -> None:
        y = x - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


class _Budget:
    __slots__ = ("left",)

    def __init__(self, budget: int):
        self.left = budget

    def spend(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise BudgetExceededError(
                f"enumeration exceeds the node budget ({NODE_BUDGET} nodes); "
                "reduce the horizon or alphabet"
            )


def _reachable_bound(profiles: List[StrategyProfile], horizon: int, cap: float) -> float:
    """Cheap estimate of the positive-probability tree size, probing one path.

    Exact for strategies whose support depends only on the period (every
    prescribed strategy here); an underestimate is possible for
    position-dependent deviations, which the traversal node counter still
    catches.  Stops early once ``cap`` is exceeded.
    """
    space = profiles[0].space
    history: list = []
    bound = 1.0
    for _ in range(horizon):
        chosen = []
        for i in range(space.num_players):
            support = set()
            for prof in profiles:
                dist = prof.strategies[i](history)
                support.update(k for k, p in enumerate(dist) if p > 0.0)
            bound *= max(1, len(support))
            chosen.append(min(support) if support else 0)
        if bound > cap:
            return bound
        history.append(tuple(chosen))
    return bound


def _check_budget(profiles: List[StrategyProfile], horizon: int, budget: int) -> None:
    bound = _reachable_bound(profiles, horizon, float(budget))
    if bound > budget:
        raise BudgetExceededError(
            f"instance needs ~{bound:.3g} enumeration nodes, over the budget of {budget}; "
            "reduce the horizon or alphabet"
        )


def _dist_table(
    profile: StrategyProfile, horizon: int, period_only: bool
) -> Optional[List[Tuple[Tuple[float, ...], ...]]]:
    """Per-period dists for history-independent profiles (None otherwise)."""
    if not period_only:
        return None
    table = []
    history: list = []
    for _ in range(horizon):
        table.append(tuple(s(history) for s in profile.strategies))
        history.append(tuple(0 for _ in profile.strategies))  # placeholder
    return table


def _leaf_walk(
    profile: StrategyProfile,
    goal: Optional[GoalSpec],
    horizon: int,
    on_leaf: Callable[[EpisodeStatus, int, Tuple, float], None],
    budget: int = NODE_BUDGET,
    period_only: bool = False,
) -> None:
    """DFS over positive-probability histories, reporting classified leaves.

    ``period_only`` may be passed when every strategy in ``profile`` ignores
    history (it is the caller's promise; distributions are then evaluated once
    per period).
    """
    space = profile.space
    n_players = space.num_players
    _check_budget([profile], horizon, budget)
    table = _dist_table(profile, horizon, period_only)
    counter = _Budget(budget)
    detector = goal.detector if goal is not None else None

    history: list = []

    def descend(depth: int, prob: float, state: Any) -> None:
        counter.spend()
        if depth == horizon:
            on_leaf(EpisodeStatus.UNDETERMINED, horizon, tuple(history), prob)
            return
        period = depth + 1
        if table is not None:
            dists = table[depth]
        else:
            dists = tuple(s(history) for s in profile.strategies)
        # Cartesian product over positive-probability actions, lexicographic.
        def branch(i: int, p_acc: float, actions: tuple) -> None:
            if i == n_players:
                history.append(actions)
                if detector is None:
                    descend(depth + 1, p_acc, None)
                else:
                    new_state, cls = detector.step(state, period, actions)
                    if cls is Classification.REJECTED_HERE:
                        counter.spend()
                        on_leaf(EpisodeStatus.REJECTED, period, tuple(history), p_acc)
                    elif cls is Classification.ACCEPTED_HERE:
                        counter.spend()
                        on_leaf(EpisodeStatus.ACCEPTED, period, tuple(history), p_acc)
                    else:
                        descend(depth + 1, p_acc, new_state)
                history.pop()
                return
            dist = dists[i]
            for a in range(len(dist)):
                pa = dist[a]
                if pa > 0.0:
                    branch(i + 1, p_acc * pa, actions + (a,))

        branch(0, prob, ())

    descend(0, 1.0, detector.initial_state() if detector is not None else None)


def enumerate_measure(
    profile: StrategyProfile,
    horizon: int,
    budget: int = NODE_BUDGET,
    period_only: bool = False,
) -> Dict[Tuple, float]:
    """Map from every positive-probability length-``horizon`` history to its
    probability.  Zero-probability histories are omitted."""
    out: Dict[Tuple, float] = {}

    def on_leaf(status, at, history, prob):
        out[history] = prob

    _leaf_walk(profile, None, horizon, on_leaf, budget, period_only)
    return out


def exact_expectation(
    profile: StrategyProfile,
    goal: Optional[GoalSpec],
    horizon: int,
    value: Callable[[EpisodeStatus, int, Tuple], float],
    budget: int = NODE_BUDGET,
    period_only: bool = False,
) -> float:
    """E[value(status, stop length, history)] under ``profile`` with the
    goal's stopping/truncation semantics (``goal=None`` runs every path to
    the horizon)."""
    acc = Kahan()

    def on_leaf(status, at, history, prob):
        if prob:
            v = value(status, at, history)
            if v:
                acc.add(prob * v)

    _leaf_walk(profile, goal, horizon, on_leaf, budget, period_only)
    return acc.total


def exact_event_probability(
    profile: StrategyProfile,
    goal: Optional[GoalSpec],
    horizon: int,
    event: Callable[[EpisodeStatus, int, Tuple], bool],
    budget: int = NODE_BUDGET,
    period_only: bool = False,
) -> float:
    return exact_expectation(
        profile, goal, horizon, lambda s, at, h: 1.0 if event(s, at, h) else 0.0,
        budget, period_only,
    )


def minimal_rejecting_prefixes(
    goal: GoalSpec,
    horizon: int,
    budget: int = NODE_BUDGET,
) -> List[Tuple[Tuple, float]]:
    """All minimal rejecting prefixes within the horizon that have positive
    probability under the prescribed profile, with those probabilities."""
    out: List[Tuple[Tuple, float]] = []

    def on_leaf(status, at, history, prob):
        if status is EpisodeStatus.REJECTED:
            out.append((history, prob))

    _leaf_walk(goal.profile, goal, horizon, on_leaf, budget)
    return out


# -- blame-bound verification -------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool
    detail: str = ""


@dataclass
class BoundsReport:
    """Exact verification of the likelihood blame rule's guarantees on one
    finite instance.

    ``eps_n`` is the prescribed-profile probability of rejection within the
    horizon; E_j partitions the minimal rejecting prefixes by blamed player.
    Checks:
      (a) for every deviator i and innocent j:
          P_(i dev)(E_j)^2 <= P_(i,j dev)(E_j) * P*(E_j) <= P*(E_j)
      (b) for every i: sum_(j != i) P_(i dev)(E_j) <= sqrt((|I|-1) eps_n)
      (c) P*(target) == 1 - (1/(|I|-1)) sum_i P*(rejected and blame != i)
    """

    goal_name: str
    horizon: int
    num_players: int
    tolerance: float
    eps_n: float
    p_target: float
    num_rejecting: int
    base_on_e: List[float]
    uni_on_e: List[List[float]]
    pair_on_e: List[List[float]]
    checks: List[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[BoundCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "goal": self.goal_name,
            "horizon": self.horizon,
            "num_players": self.num_players,
            "tolerance": self.tolerance,
            "eps_n": self.eps_n,
            "p_target": self.p_target,
            "num_rejecting_prefixes": self.num_rejecting,
            "base_on_e": self.base_on_e,
            "uni_on_e": self.uni_on_e,
            "pair_on_e": self.pair_on_e,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                    "passed": c.passed,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }


def verify_blame_bounds(
    goal: GoalSpec,
    hypothesis: StrategyProfile,
    horizon: int,
    tolerance: float = 1e-10,
    budget: int = NODE_BUDGET,
) -> BoundsReport:
    """Enumerate the instance exactly and check the inequality chain behind
    the likelihood blame rule.

    The traversal tracks, per node: the prescribed measure, each unilateral
    deviation measure (player i swapped for hypothesis_i), every two-player
    swap measure, and each player's running log-likelihood ratio.  Branches
    carrying zero mass under all tracked measures are pruned.
    """
    space = goal.profile.space
    if hypothesis.space != space:
        raise InvalidInputError("hypothesis profile is on a different action space")
    n = space.num_players
    base_strats = goal.profile.strategies
    hyp_strats = hypothesis.strategies
    _check_budget([goal.profile, hypothesis], horizon, budget)
    counter = _Budget(budget)

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pair_pos = {pq: k for k, pq in enumerate(pairs)}

    eps_n = Kahan()
    p_target = Kahan()
    num_rejecting = 0
    base_on_e = [Kahan() for _ in range(n)]
    uni_on_e = [[Kahan() for _ in range(n)] for _ in range(n)]
    pair_on_e = [[Kahan() for _ in range(n)] for _ in range(n)]

    history: list = []

    def on_reject(base_p, uni_p, pair_p, llrs):
        nonlocal num_rejecting
        num_rejecting += 1
        verdict = blame_from_llrs([acc.result() for acc in llrs])
        j = verdict.blamed
        eps_n.add(base_p)
        base_on_e[j].add(base_p)
        for i in range(n):
            uni_on_e[i][j].add(uni_p[i])
            if i != j:
                key = (i, j) if i < j else (j, i)
                pair_on_e[i][j].add(pair_p[pair_pos[key]])

    def on_target(base_p):
        p_target.add(base_p)

    def descend(depth, state, base_p, uni_p, pair_p, llrs):
        counter.spend()
        if depth == horizon:
            if goal.polarity is Polarity.REJECTION_OPEN:
                on_target(base_p)
            return
        period = depth + 1
        base_d = [base_strats[i](history) for i in range(n)]
        hyp_d = [hyp_strats[i](history) for i in range(n)]

        def branch(i, actions, f_base, f_uni, f_pair):
            if i == n:
                nb = base_p * f_base
                nu = [uni_p[k] * f_uni[k] for k in range(n)]
                npair = [pair_p[k] * f_pair[k] for k in range(len(pairs))]
                if nb == 0.0 and not any(nu) and not any(npair):
                    return
                new_llrs = []
                for k in range(n):
                    acc = LLRAccumulator()
                    acc.log_sum = llrs[k].log_sum
                    acc.has_zero = llrs[k].has_zero
                    acc.has_inf = llrs[k].has_inf
                    acc.add(hyp_d[k][actions[k]], base_d[k][actions[k]])
                    new_llrs.append(acc)
                history.append(actions)
                new_state, cls = goal.detector.step(state, period, actions)
                if cls is Classification.REJECTED_HERE:
                    counter.spend()
                    on_reject(nb, nu, npair, new_llrs)
                elif cls is Classification.ACCEPTED_HERE:
                    counter.spend()
                    on_target(nb)
                else:
                    descend(depth + 1, new_state, nb, nu, npair, new_llrs)
                history.pop()
                return
            for a in range(len(base_d[i])):
                pb = base_d[i][a]
                ph = hyp_d[i][a]
                if pb == 0.0 and ph == 0.0:
                    continue
                g_uni = [ph if k == i else pb for k in range(n)]
                g_pair = [ph if i in pq else pb for pq in pairs]
                branch(
                    i + 1,
                    actions + (a,),
                    f_base * pb,
                    [f_uni[k] * g_uni[k] for k in range(n)],
                    [f_pair[k] * g_pair[k] for k in range(len(pairs))],
                )

        branch(0, (), 1.0, [1.0] * n, [1.0] * len(pairs))

    descend(
        0,
        goal.detector.initial_state(),
        1.0,
        [1.0] * n,
        [1.0] * len(pairs),
        [LLRAccumulator() for _ in range(n)],
    )

    report = BoundsReport(
        goal_name=goal.name,
        horizon=horizon,
        num_players=n,
        tolerance=tolerance,
        eps_n=eps_n.total,
        p_target=p_target.total,
        num_rejecting=num_rejecting,
        base_on_e=[k.total for k in base_on_e],
        uni_on_e=[[k.total for k in row] for row in uni_on_e],
        pair_on_e=[[k.total for k in row] for row in pair_on_e],
    )

    # (a) Cauchy-Schwarz chain, both links.
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lhs = report.uni_on_e[i][j] ** 2
            mid = report.pair_on_e[i][j] * report.base_on_e[j]
            report.checks.append(
                BoundCheck(
                    f"chain_sq_le_pair[{i}->{j}]", lhs, mid,
                    lhs <= mid + tolerance,
                    "P_i(E_j)^2 vs P_ij(E_j) P*(E_j)",
                )
            )
            report.checks.append(
                BoundCheck(
                    f"chain_sq_le_base[{i}->{j}]", lhs, report.base_on_e[j],
                    lhs <= report.base_on_e[j] + tolerance,
                    "P_i(E_j)^2 vs P*(E_j)",
                )
            )
    # (b) guarantee bound.
    rhs_b = math.sqrt((n - 1) * report.eps_n)
    for i in range(n):
        lhs = math.fsum(report.uni_on_e[i][j] for j in range(n) if j != i)
        report.checks.append(
            BoundCheck(
                f"innocent_blame_bound[{i}]", lhs, rhs_b,
                lhs <= rhs_b + tolerance,
                "sum_j!=i P_i(E_j) vs sqrt((|I|-1) eps_n)",
            )
        )
    # (c) testability identity under honest play.
    rhs_c = 1.0 - math.fsum(report.eps_n - report.base_on_e[i] for i in range(n)) / (n - 1)
    report.checks.append(
        BoundCheck(
            "testability_identity", report.p_target, rhs_c,
            abs(report.p_target - rhs_c) <= tolerance,
            "P*(target) vs 1 - sum_i P*(miss and blame != i)/(|I|-1)",
        )
    )
    return report
