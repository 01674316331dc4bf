"""High-throughput trial runner: blame-error estimates, miss probabilities,
and calibration of the random-walk surrogate thresholds.

Trials are embarrassingly parallel: every trial owns a counter-based stream
keyed by (master seed, trial index), results are assembled by trial index,
and aggregation order is fixed, so a run is byte-reproducible for any worker
count.  Experiments whose goal and strategies are expressible as kernel rule
codes run on the compiled kernels; the likelihood blame rule (and any custom
strategy) uses the generic episode loop instead.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, adjacent_ones, random_walk, single_bit
from .core import EpisodeStatus, GoalSpec, StrategyProfile, play_episode
from .deviations import DeviationSpec, apply_deviations
from .likelihood import max_likelihood_blame
from .random_walk import SurrogateThresholds
from .rng import TrialStream

SCHEMA_VERSION = 1

GOAL_IDS = ("adjacent_ones", "random_walk", "single_bit")
BLAME_IDS = ("adjacent_ones_threshold", "random_walk_steps", "likelihood")


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


class CalibrationError(RuntimeError):
    """Too few conditioned episodes to estimate threshold quantiles."""


# -- configuration -------------------------------------------------------------


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def deviation_from_dict(raw: Mapping[str, Any]) -> DeviationSpec:
    _require(isinstance(raw, Mapping), "deviation entries must be objects")
    _require("player" in raw, "deviation missing field 'player'")
    _require("kind" in raw, "deviation missing field 'kind'")
    try:
        return DeviationSpec(
            player=int(raw["player"]),
            kind=str(raw["kind"]),
            action=raw.get("action"),
            p=raw.get("p"),
            lo=raw.get("lo"),
            hi=raw.get("hi"),
        )
    except ValueError as exc:
        raise ConfigError(f"deviation: {exc}") from exc


def deviation_to_dict(spec: DeviationSpec) -> dict:
    out: dict = {"player": spec.player, "kind": spec.kind}
    for name in ("action", "p", "lo", "hi"):
        value = getattr(spec, name)
        if value is not None:
            out[name] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    goal_id: str
    goal_params: Mapping[str, Any]
    horizon: int
    trials: int
    seed: int
    blame_id: str
    blame_params: Mapping[str, Any]
    deviations: Tuple[DeviationSpec, ...] = ()
    confidence: float = 0.99
    label: str = ""

    @staticmethod
    def from_dict(raw: Mapping[str, Any]) -> "ExperimentConfig":
        _require(isinstance(raw, Mapping), "config must be an object")
        goal = raw.get("goal")
        _require(isinstance(goal, Mapping), "config missing object field 'goal'")
        goal_id = goal.get("id")
        _require(goal_id is not None, "config missing field 'goal.id'")
        _require(goal_id in GOAL_IDS, f"unknown goal id {goal_id!r} (field 'goal.id')")
        goal_params = {k: v for k, v in goal.items() if k != "id"}

        blame = raw.get("blame")
        _require(isinstance(blame, Mapping), "config missing object field 'blame'")
        blame_id = blame.get("id")
        _require(blame_id is not None, "config missing field 'blame.id'")
        _require(blame_id in BLAME_IDS, f"unknown blame id {blame_id!r} (field 'blame.id')")
        blame_params = {k: v for k, v in blame.items() if k != "id"}

        horizon = raw.get("horizon")
        _require(isinstance(horizon, int) and horizon >= 1, "field 'horizon' must be an integer >= 1")
        trials = raw.get("trials")
        _require(isinstance(trials, int) and trials >= 1, "field 'trials' must be an integer >= 1")
        seed = raw.get("seed")
        _require(isinstance(seed, int) and seed >= 0, "field 'seed' must be a non-negative integer")
        confidence = raw.get("confidence", 0.99)
        _require(
            isinstance(confidence, (int, float)) and 0.0 < confidence < 1.0,
            "field 'confidence' must be in (0, 1)",
        )

        actual = raw.get("actual", {})
        _require(isinstance(actual, Mapping), "field 'actual' must be an object")
        dev_raw = actual.get("deviations", [])
        _require(isinstance(dev_raw, Sequence), "field 'actual.deviations' must be a list")
        deviations = tuple(deviation_from_dict(d) for d in dev_raw)

        cfg = ExperimentConfig(
            goal_id=goal_id,
            goal_params=goal_params,
            horizon=horizon,
            trials=trials,
            seed=seed,
            blame_id=blame_id,
            blame_params=blame_params,
            deviations=deviations,
            confidence=float(confidence),
            label=str(raw.get("label", "")),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.goal_id == "adjacent_ones":
            _require("mu" in self.goal_params, "adjacent_ones goal missing field 'goal.mu'")
            _require(
                self.blame_id in ("adjacent_ones_threshold", "likelihood"),
                f"blame {self.blame_id!r} does not apply to the adjacent_ones goal",
            )
        elif self.goal_id == "single_bit":
            _require("mu" in self.goal_params, "single_bit goal missing field 'goal.mu'")
            _require(
                self.blame_id == "likelihood",
                f"blame {self.blame_id!r} does not apply to the single_bit goal",
            )
        elif self.goal_id == "random_walk":
            _require(
                self.blame_id == "random_walk_steps",
                f"blame {self.blame_id!r} does not apply to the random_walk goal",
            )
            _require(self.horizon % 2 == 0, "random_walk horizon must be even (field 'horizon')")
            thr = self.blame_params.get("thresholds")
            _require(
                isinstance(thr, Mapping)
                and all(k in thr for k in ("theta1", "theta2", "theta3")),
                "random_walk_steps blame missing field 'blame.thresholds' "
                "(theta1/theta2/theta3; run calibrate first)",
            )
        if self.blame_id == "adjacent_ones_threshold":
            variant = self.blame_params.get("variant", "full")
            _require(
                variant in ("full", "prefix"),
                "field 'blame.variant' must be 'full' or 'prefix'",
            )
        if self.blame_id == "likelihood":
            hyp = self.blame_params.get("hypothesis", [])
            _require(isinstance(hyp, Sequence), "field 'blame.hypothesis' must be a list")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "goal": {"id": self.goal_id, **dict(self.goal_params)},
            "horizon": self.horizon,
            "trials": self.trials,
            "seed": self.seed,
            "confidence": self.confidence,
            "actual": {"deviations": [deviation_to_dict(d) for d in self.deviations]},
            "blame": {"id": self.blame_id, **dict(self.blame_params)},
        }


def build_goal(goal_id: str, params: Mapping[str, Any]) -> GoalSpec:
    if goal_id == "adjacent_ones":
        return adjacent_ones.adjacent_ones_goal(float(params["mu"]))
    if goal_id == "single_bit":
        return single_bit.single_bit_goal(float(params["mu"]))
    if goal_id == "random_walk":
        return random_walk.random_walk_goal(int(params.get("start", random_walk.DEFAULT_START)))
    raise ConfigError(f"unknown goal id {goal_id!r}")


# -- reports -------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, confidence: float) -> Tuple[float, float]:
    """Wilson score interval; always contains the point estimate."""
    if not 0 <= successes <= trials or trials < 1:
        raise ConfigError("wilson_interval needs 0 <= successes <= trials, trials >= 1")
    if not 0.0 < confidence < 1.0:
        raise ConfigError("confidence must be in (0, 1)")
    z = NormalDist().inv_cdf((1.0 + confidence) / 2.0)
    n = float(trials)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    # endpoints are exactly 0/1 at the boundary counts; avoid float residue
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


CSV_HEADERS = (
    "label",
    "goal",
    "blame",
    "horizon",
    "trials",
    "seed",
    "confidence",
    "metric",
    "count",
    "denominator",
    "estimate",
    "wilson_lo",
    "wilson_hi",
)


@dataclass
class EstimateReport:
    """Counts and Wilson-interval estimates for one experiment.

    ``runtime_seconds`` is diagnostic only and deliberately excluded from the
    serialized forms, which must be byte-identical across reruns.
    """

    config: ExperimentConfig
    counts: Dict[str, int]
    metrics: List[Tuple[str, int, int]] = field(default_factory=list)  # (name, count, denom)
    runtime_seconds: float = 0.0

    def estimates(self) -> Dict[str, dict]:
        out: Dict[str, dict] = {}
        for name, count, denom in self.metrics:
            entry: dict = {"count": count, "denominator": denom}
            if denom > 0:
                lo, hi = wilson_interval(count, denom, self.config.confidence)
                entry.update({"estimate": count / denom, "wilson_lo": lo, "wilson_hi": hi})
            out[name] = entry
        return out

    def estimate(self, name: str) -> dict:
        return self.estimates()[name]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "counts": dict(sorted(self.counts.items())),
            "estimates": self.estimates(),
        }

    def csv_rows(self) -> List[dict]:
        rows = []
        cfg = self.config
        for name, count, denom in self.metrics:
            est = self.estimates()[name]
            rows.append(
                {
                    "label": cfg.label,
                    "goal": cfg.goal_id,
                    "blame": cfg.blame_id,
                    "horizon": cfg.horizon,
                    "trials": cfg.trials,
                    "seed": cfg.seed,
                    "confidence": cfg.confidence,
                    "metric": name,
                    "count": count,
                    "denominator": denom,
                    "estimate": est.get("estimate", ""),
                    "wilson_lo": est.get("wilson_lo", ""),
                    "wilson_hi": est.get("wilson_hi", ""),
                }
            )
        return rows


# -- kernel dispatch -----------------------------------------------------------


_ADJ_KIND = {
    "honest": _kernels.K_HONEST,
    "always": _kernels.K_ALWAYS,
    "biased": _kernels.K_BIASED,
    "first_move_then_honest": _kernels.K_FIRST,
    "drift_up": _kernels.K_DRIFT,
}

_WALK_KIND = dict(_ADJ_KIND, pin_to_band=_kernels.K_PIN, reflect_at_one=_kernels.K_REFLECT)


def _adj_rules(deviations: Sequence[DeviationSpec]) -> tuple:
    rules = [(_kernels.K_HONEST, 0.0), (_kernels.K_HONEST, 0.0)]
    for spec in deviations:
        kind = _ADJ_KIND.get(spec.kind)
        if kind is None:
            raise ConfigError(f"deviation kind {spec.kind!r} does not apply to adjacent_ones")
        if spec.kind in ("always", "first_move_then_honest"):
            x = float(spec.action)
            _require(x in (0.0, 1.0), "adjacent_ones actions are bits (field 'action')")
        elif spec.kind in ("biased", "drift_up"):
            x = float(spec.p)
        else:
            x = 0.0
        rules[spec.player] = (kind, x)
    return tuple(rules)


def _walk_rules(deviations: Sequence[DeviationSpec]) -> tuple:
    rules = [(_kernels.K_HONEST, 0.0, 0.0), (_kernels.K_HONEST, 0.0, 0.0)]
    for spec in deviations:
        kind = _WALK_KIND.get(spec.kind)
        if kind is None:
            raise ConfigError(f"deviation kind {spec.kind!r} does not apply to random_walk")
        if spec.kind in ("always", "first_move_then_honest"):
            _require(spec.action in (-1, 1), "random_walk actions are -1/+1 (field 'action')")
            rule = (kind, 1.0 if spec.action == 1 else 0.0, 0.0)
        elif spec.kind in ("biased", "drift_up"):
            rule = (kind, float(spec.p), 0.0)
        elif spec.kind == "pin_to_band":
            rule = (kind, float(spec.lo), float(spec.hi))
        else:
            rule = (kind, 0.0, 0.0)
        rules[spec.player] = rule
    return tuple(rules)


def _blocks(n: int, threads: int) -> List[Tuple[int, int]]:
    chunk = max(1024, -(-n // (4 * max(1, threads))))
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def _run_blocked(fn, n_trials: int, threads: int) -> List[np.ndarray] | np.ndarray:
    """Run fn(trial_start, count) over blocks, concatenating outputs in trial
    order (identical results for any thread count)."""
    spans = _blocks(n_trials, threads)
    if threads <= 1 or len(spans) == 1:
        parts = [fn(lo, hi - lo) for lo, hi in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(fn, lo, hi - lo) for lo, hi in spans]
            parts = [f.result() for f in futures]
    if isinstance(parts[0], tuple):
        return [np.concatenate([p[k] for p in parts]) for k in range(len(parts[0]))]
    return np.concatenate(parts)


# -- engines -------------------------------------------------------------------


def _run_adjacent_ones(config: ExperimentConfig, threads: int) -> EstimateReport:
    mu = float(config.goal_params["mu"])
    rules = _adj_rules(config.deviations)
    variant = config.blame_params.get("variant", "full")

    def block(lo: int, count: int):
        return _kernels.adj_batch(mu, config.horizon, rules, config.seed, lo, count)

    rejected, _periods, wsum_prefix, wsum_full = _run_blocked(block, config.trials, threads)
    wsum = wsum_full if variant == "full" else wsum_prefix
    rej = rejected.astype(bool)
    blame_a = rej & (wsum > mu)
    blame_b = rej & ~blame_a
    counts = {
        "rejected": int(rej.sum()),
        "blamed_a": int(blame_a.sum()),
        "blamed_b": int(blame_b.sum()),
    }
    metrics = [
        ("miss", counts["rejected"], config.trials),
        ("miss_and_blame_a", counts["blamed_a"], config.trials),
        ("miss_and_blame_b", counts["blamed_b"], config.trials),
        ("blame_a_given_miss", counts["blamed_a"], counts["rejected"]),
        ("blame_b_given_miss", counts["blamed_b"], counts["rejected"]),
    ]
    return EstimateReport(config, counts, metrics)


def _run_random_walk(config: ExperimentConfig, threads: int) -> EstimateReport:
    start = int(config.goal_params.get("start", random_walk.DEFAULT_START))
    rules = _walk_rules(config.deviations)
    thr_raw = config.blame_params["thresholds"]
    thresholds = SurrogateThresholds(
        theta1=float(thr_raw["theta1"]),
        theta2=float(thr_raw["theta2"]),
        theta3=float(thr_raw["theta3"]),
        n0=int(thr_raw.get("n0", 100)),
    )

    def scan_block(lo: int, count: int):
        return _kernels.rw_scan(start, config.horizon, rules, config.seed, lo, count)

    hit_time = _run_blocked(scan_block, config.trials, threads)
    dc_idx = np.nonzero(hit_time < 0)[0].astype(np.int64)
    stats = _walk_stats(config, start, rules, dc_idx, thresholds.n0, threads)
    decided, blamed = _walk_blame_arrays(stats, thresholds)

    counts = {
        "reached_target": int((hit_time >= 0).sum()),
        "missed_target": int(len(dc_idx)),
        "blamed_a": int((blamed == random_walk.PLAYER_A).sum()),
        "blamed_b": int((blamed == random_walk.PLAYER_B).sum()),
        "decided_step1": int((decided == 1).sum()),
        "decided_step2": int((decided == 2).sum()),
        "decided_step3": int((decided == 3).sum()),
        "decided_step4": int((decided == 4).sum()),
    }
    dc = counts["missed_target"]
    metrics = [
        ("miss", dc, config.trials),
        ("miss_and_blame_a", counts["blamed_a"], config.trials),
        ("miss_and_blame_b", counts["blamed_b"], config.trials),
        ("blame_a_given_miss", counts["blamed_a"], dc),
        ("blame_b_given_miss", counts["blamed_b"], dc),
        ("threshold_blame_given_miss", dc - counts["decided_step4"], dc),
    ]
    return EstimateReport(config, counts, metrics)


def _walk_stats(config, start, rules, trial_indices, n0, threads):
    tables = random_walk.weight_tables(config.horizon // 2)

    def stats_block(lo: int, count: int):
        return _kernels.rw_stats_batch(
            start, config.horizon, rules, config.seed,
            trial_indices[lo : lo + count], n0, tables,
        )

    if len(trial_indices) == 0:
        empty = np.empty(0)
        return (np.empty(0, dtype=np.int64),) + (empty,) * 6
    return tuple(_run_blocked(stats_block, len(trial_indices), threads))


def _walk_blame_arrays(stats, thresholds: SurrogateThresholds):
    """Vectorized form of random_walk.blame_from_stats over episode arrays."""
    _, s1a, s1b, s2a, s2b, t_odd, t_even = stats
    n = len(s1a)
    decided = np.full(n, 4, dtype=np.int64)
    blamed = np.full(n, random_walk.PLAYER_A, dtype=np.int64)
    undecided = np.ones(n, dtype=bool)
    for step, stat, player in (
        (1, s1a, random_walk.PLAYER_A),
        (1, s1b, random_walk.PLAYER_B),
        (2, s2a, random_walk.PLAYER_A),
        (2, s2b, random_walk.PLAYER_B),
        (3, t_odd, random_walk.PLAYER_B),
        (3, t_even, random_walk.PLAYER_A),
    ):
        theta = {1: thresholds.theta1, 2: thresholds.theta2, 3: thresholds.theta3}[step]
        fire = undecided & (stat > theta)
        decided[fire] = step
        blamed[fire] = player
        undecided &= ~fire
    return decided, blamed


def _run_generic(config: ExperimentConfig, threads: int) -> EstimateReport:
    goal = build_goal(config.goal_id, config.goal_params)
    actual = apply_deviations(goal, config.deviations)
    hyp_specs = [deviation_from_dict(d) for d in config.blame_params.get("hypothesis", [])]
    hypothesis = apply_deviations(goal, hyp_specs)

    missed = np.zeros(config.trials, dtype=bool)
    blamed = np.full(config.trials, -1, dtype=np.int64)
    ties = np.zeros(config.trials, dtype=bool)

    def block(lo: int, count: int):
        for t in range(lo, lo + count):
            result = play_episode(goal, actual, config.horizon, TrialStream(config.seed, t))
            if not result.in_target(goal.polarity):
                missed[t] = True
                verdict = max_likelihood_blame(hypothesis, goal.profile, result.history)
                blamed[t] = verdict.blamed
                ties[t] = verdict.tie
        return np.empty(0)

    _run_blocked(block, config.trials, threads)
    counts = {
        "rejected": int(missed.sum()),
        "blamed_a": int((blamed == 0).sum()),
        "blamed_b": int((blamed == 1).sum()),
        "ties": int(ties.sum()),
    }
    metrics = [
        ("miss", counts["rejected"], config.trials),
        ("miss_and_blame_a", counts["blamed_a"], config.trials),
        ("miss_and_blame_b", counts["blamed_b"], config.trials),
        ("blame_a_given_miss", counts["blamed_a"], counts["rejected"]),
        ("blame_b_given_miss", counts["blamed_b"], counts["rejected"]),
    ]
    return EstimateReport(config, counts, metrics)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> EstimateReport:
    """Run one experiment; deterministic in (config, seed) for any thread
    count."""
    import time

    t0 = time.perf_counter()
    if config.blame_id == "adjacent_ones_threshold":
        report = _run_adjacent_ones(config, threads)
    elif config.blame_id == "random_walk_steps":
        report = _run_random_walk(config, threads)
    else:
        report = _run_generic(config, threads)
    report.runtime_seconds = time.perf_counter() - t0
    return report


# -- calibration ---------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    thresholds: SurrogateThresholds
    alpha: float
    trials: int
    conditioned_episodes: int
    horizon: int
    start: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "thresholds": {
                "theta1": self.thresholds.theta1,
                "theta2": self.thresholds.theta2,
                "theta3": self.thresholds.theta3,
                "n0": self.thresholds.n0,
            },
            "alpha": self.alpha,
            "trials": self.trials,
            "conditioned_episodes": self.conditioned_episodes,
            "horizon": self.horizon,
            "start": self.start,
            "seed": self.seed,
        }


MIN_CONDITIONED = 100


def calibrate_thresholds(
    start: int,
    horizon: int,
    alpha: float,
    trials: int,
    seed: int,
    n0: int = 100,
    threads: int = 1,
) -> CalibrationResult:
    """Thresholds from honest-vs-honest play conditioned on missing the target.

    Each theta is the empirical (1 - alpha) quantile of the corresponding
    step's firing statistic (the max over the two one-sided variants), so each
    step fires on honest conditioned play with probability about alpha.
    """
    if not 0.0 < alpha <= 0.5:
        raise ConfigError("alpha must be in (0, 0.5]")
    if horizon % 2 != 0:
        raise ConfigError("horizon must be even")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rules = ((_kernels.K_HONEST, 0.0, 0.0), (_kernels.K_HONEST, 0.0, 0.0))

    def scan_block(lo: int, count: int):
        return _kernels.rw_scan(start, horizon, rules, seed, lo, count)

    hit_time = _run_blocked(scan_block, trials, threads)
    dc_idx = np.nonzero(hit_time < 0)[0].astype(np.int64)
    if len(dc_idx) < MIN_CONDITIONED:
        raise CalibrationError(
            f"only {len(dc_idx)} conditioned episodes (< {MIN_CONDITIONED}); "
            "increase trials or reduce the horizon"
        )
    tables = random_walk.weight_tables(horizon // 2)

    def stats_block(lo: int, count: int):
        return _kernels.rw_stats_batch(
            start, horizon, rules, seed, dc_idx[lo : lo + count], n0, tables
        )

    stats = _run_blocked(stats_block, len(dc_idx), threads)
    _, s1a, s1b, s2a, s2b, t_odd, t_even = stats
    q = 1.0 - alpha
    thresholds = SurrogateThresholds(
        theta1=float(np.quantile(np.maximum(s1a, s1b), q)),
        theta2=float(np.quantile(np.maximum(s2a, s2b), q)),
        theta3=float(np.quantile(np.maximum(t_odd, t_even), q)),
        n0=n0,
    )
    return CalibrationResult(
        thresholds=thresholds,
        alpha=alpha,
        trials=trials,
        conditioned_episodes=int(len(dc_idx)),
        horizon=horizon,
        start=start,
        seed=seed,
    )
