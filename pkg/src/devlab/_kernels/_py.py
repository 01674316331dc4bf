"""Pure-Python/numpy episode kernels (fallback backend).

Same interface and bit-identical outputs as the compiled backend in
``_native.pyx``; selected automatically when the extension is unavailable
(or when DEVLAB_FORCE_PYTHON_KERNELS is set).  Rules whose move distribution
depends only on the period are vectorized per trial; position-dependent walk
rules (pin_to_band, reflect_at_one) fall back to a stepwise loop.

Rule encodings, probabilities of the "high" action (bit 1 / move +1), and
draw consumption are the single source of truth here; the native kernel
mirrors these formulas expression for expression.
"""

from __future__ import annotations

import numpy as np

from ..rng import philox_generator

# rule kinds (shared with the native kernel and with montecarlo's encoder)
K_HONEST = 0
K_ALWAYS = 1
K_BIASED = 2
K_FIRST = 3
K_DRIFT = 4
K_PIN = 5
K_REFLECT = 6

STATE_FREE_KINDS = (K_HONEST, K_ALWAYS, K_BIASED, K_FIRST, K_DRIFT)

_SCAN_CHUNK = 2048


def _adj_period_probs(mu: float, horizon: int, rules) -> np.ndarray:
    """P(bit 1) per period under alternation; player 0 moves odd periods."""
    p = np.empty(horizon)
    for player in (0, 1):
        kind, x = rules[player]
        n_own = np.arange(1 + player, horizon + 1, 2, dtype=np.float64)
        base = mu / n_own
        if kind == K_HONEST:
            pv = base
        elif kind in (K_ALWAYS, K_BIASED):
            pv = np.full(len(n_own), x)
        elif kind == K_FIRST:
            pv = base
            if len(pv):
                pv[0] = x
        elif kind == K_DRIFT:
            pv = x + (1.0 - x) * base
        else:
            raise ValueError(f"rule kind {kind} not valid for the adjacent-ones goal")
        p[player::2] = pv
    return p


def adj_batch(mu, horizon, rules, seed, trial_start, n_trials):
    """Simulate adjacent-ones episodes to the full horizon.

    Returns (rejected u1, reject_period i8, wsum_prefix f8, wsum_full f8);
    reject_period is the even period completing the first 1,1 round (0 if
    none).  The weighted-sum statistic is accumulated in period order so both
    variants match the streaming kernel exactly.
    """
    p = _adj_period_probs(mu, horizon, rules)
    draw_mask = (p > 0.0) & (p < 1.0)
    thresholds = 1.0 - p[draw_mask]
    forced_one = p >= 1.0
    n_draws = int(draw_mask.sum())
    n_odd = horizon // 2 + horizon % 2
    odd_weights = mu / (2.0 * np.arange(n_odd, dtype=np.float64) + 2.0)

    rejected = np.zeros(n_trials, dtype=np.uint8)
    reject_period = np.zeros(n_trials, dtype=np.int64)
    wsum_prefix = np.zeros(n_trials)
    wsum_full = np.zeros(n_trials)

    bits = np.empty(horizon, dtype=bool)
    for t in range(n_trials):
        gen = philox_generator(seed, trial_start + t)
        np.copyto(bits, forced_one)
        if n_draws:
            bits[draw_mask] = gen.random(n_draws) >= thresholds
        odd_bits = bits[0::2]
        even_bits = bits[1::2]
        pair_hits = odd_bits[: len(even_bits)] & even_bits
        terms = np.cumsum(odd_bits * odd_weights)
        full = float(terms[-1]) if n_odd else 0.0
        wsum_full[t] = full
        if pair_hits.any():
            k = int(np.argmax(pair_hits))
            rejected[t] = 1
            reject_period[t] = 2 * k + 2
            wsum_prefix[t] = float(terms[k])
        else:
            wsum_prefix[t] = full
    return rejected, reject_period, wsum_prefix, wsum_full


def _rw_period_probs(horizon: int, rules) -> np.ndarray:
    """P(move +1) per period for state-free rules."""
    p = np.empty(horizon)
    for player in (0, 1):
        kind, x1, _x2 = rules[player]
        n_own = (horizon - player + 1) // 2
        if kind == K_HONEST:
            pv = np.full(n_own, 0.5)
        elif kind in (K_ALWAYS, K_BIASED):
            pv = np.full(n_own, x1)
        elif kind == K_FIRST:
            pv = np.full(n_own, 0.5)
            if n_own:
                pv[0] = x1
        elif kind == K_DRIFT:
            pv = np.full(n_own, x1 + (1.0 - x1) * 0.5)
        else:
            raise ValueError("state-dependent kind in the vectorized path")
        p[player::2] = pv
    return p


def _rw_moves_vector(horizon, p, draw_mask, thresholds, forced_up, gen, start):
    """One trial's moves/positions for state-free rules, chunked so episodes
    that hit the origin early do not pay for the whole horizon."""
    moves = np.empty(horizon, dtype=np.int64)
    pos = 0
    s = start
    while pos < horizon:
        end = min(pos + _SCAN_CHUNK, horizon)
        mask = draw_mask[pos:end]
        chunk = forced_up[pos:end].astype(np.int64) * 2 - 1
        n_draws = int(mask.sum())
        if n_draws:
            u = gen.random(n_draws)
            chunk[mask] = np.where(u >= thresholds[pos:end][mask], 1, -1)
        moves[pos:end] = chunk
        positions = s + np.cumsum(chunk)
        hit = positions == 0
        if hit.any():
            idx = int(np.argmax(hit))
            return moves[: pos + idx + 1], pos + idx + 1
        s = int(positions[-1])
        pos = end
    return moves, -1


def _rw_prob(kind, x1, x2, m, s):
    # Canonical state-dependent walk probabilities (mirrored in C).
    if kind == K_HONEST:
        return 0.5
    if kind == K_ALWAYS or kind == K_BIASED:
        return x1
    if kind == K_FIRST:
        return x1 if m == 1 else 0.5
    if kind == K_DRIFT:
        return x1 + (1.0 - x1) * 0.5
    if kind == K_PIN:
        if s < x1 or s == 1:
            return 1.0
        if s > x2:
            return 0.0
        return 0.5
    if kind == K_REFLECT:
        return 1.0 if s == 1 else 0.5
    raise ValueError(f"unknown rule kind {kind}")


class _Stream:
    """Chunked scalar consumption of one trial's uniforms."""

    __slots__ = ("gen", "buf", "pos")

    def __init__(self, gen):
        self.gen = gen
        self.buf = np.empty(0)
        self.pos = 0

    def next(self) -> float:
        if self.pos >= len(self.buf):
            self.buf = self.gen.random(_SCAN_CHUNK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return float(u)


def _rw_moves_stepwise(horizon, rules, gen, start):
    stream = _Stream(gen)
    moves = np.empty(horizon, dtype=np.int64)
    s = start
    for n in range(1, horizon + 1):
        player = 0 if n % 2 == 1 else 1
        kind, x1, x2 = rules[player]
        m = (n + 1) // 2
        p = _rw_prob(kind, x1, x2, m, s)
        if p <= 0.0:
            mv = -1
        elif p >= 1.0:
            mv = 1
        else:
            mv = 1 if stream.next() >= 1.0 - p else -1
        moves[n - 1] = mv
        s += mv
        if s == 0:
            return moves[:n], n
    return moves, -1


def _state_free(rules) -> bool:
    return all(kind in STATE_FREE_KINDS for kind, *_ in rules)


def rw_scan(start, horizon, rules, seed, trial_start, n_trials):
    """Hit time of the origin per trial (-1 if not reached by the horizon)."""
    hit_time = np.empty(n_trials, dtype=np.int64)
    if _state_free(rules):
        p = _rw_period_probs(horizon, rules)
        draw_mask = (p > 0.0) & (p < 1.0)
        thresholds = np.where(draw_mask, 1.0 - p, 0.0)
        forced_up = p >= 1.0
        for t in range(n_trials):
            gen = philox_generator(seed, trial_start + t)
            _, hit = _rw_moves_vector(
                horizon, p, draw_mask, thresholds, forced_up, gen, start
            )
            hit_time[t] = hit
    else:
        for t in range(n_trials):
            gen = philox_generator(seed, trial_start + t)
            _, hit = _rw_moves_stepwise(horizon, rules, gen, start)
            hit_time[t] = hit
    return hit_time


def rw_stats_batch(start, horizon, rules, seed, trial_indices, n0, tables):
    """Replay the given trials to the horizon and compute blame statistics.

    Trials that hit the origin get NaN statistics (blame is undefined there).
    Returns (hit_time, step1_a, step1_b, step2_a, step2_b, t_odd, t_even).
    """
    from .. import random_walk

    m = len(trial_indices)
    hit_time = np.empty(m, dtype=np.int64)
    out = [np.full(m, np.nan) for _ in range(6)]
    state_free = _state_free(rules)
    if state_free:
        p = _rw_period_probs(horizon, rules)
        draw_mask = (p > 0.0) & (p < 1.0)
        thresholds = np.where(draw_mask, 1.0 - p, 0.0)
        forced_up = p >= 1.0
    for j, trial in enumerate(trial_indices):
        gen = philox_generator(seed, int(trial))
        if state_free:
            moves, hit = _rw_moves_vector(
                horizon, p, draw_mask, thresholds, forced_up, gen, start
            )
        else:
            moves, hit = _rw_moves_stepwise(horizon, rules, gen, start)
        hit_time[j] = hit
        if hit >= 0:
            continue
        trace = random_walk.WalkTrace(moves[0::2], moves[1::2], start)
        stats = random_walk.trace_statistics(trace, n0)
        out[0][j] = stats.step1_a
        out[1][j] = stats.step1_b
        out[2][j] = stats.step2_a
        out[3][j] = stats.step2_b
        out[4][j] = stats.t_odd
        out[5][j] = stats.t_even
    return (hit_time, *out)
