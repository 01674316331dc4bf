"""Counter-based per-trial random streams.

Every episode draws from its own Philox4x64-10 stream keyed by
``(master_seed, trial_index)``.  Philox is counter-based, so streams are
order-independent: trial 7 produces the same episode whether it runs first,
last, or on another thread.  The compiled kernels implement the identical
block function in C (verified bit-for-bit against numpy in the test suite).

Draw discipline, shared by every code path in the package:

* sampling from a distribution consumes exactly one uniform, except exact
  point masses (some probability equal to 1.0), which consume none;
* the action index is chosen by cumulative inverse-CDF scan in alphabet order.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_CHUNK = 512


def philox_generator(master_seed: int, trial_index: int) -> np.random.Generator:
    """The reference generator for one trial's stream."""
    key = np.array([master_seed, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class TrialStream:
    """Buffered uniform doubles from one trial's Philox stream.

    Chunked generation yields the same sequence as repeated scalar calls,
    so consumers may buffer freely without changing results.
    """

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, master_seed: int, trial_index: int):
        self._gen = philox_generator(master_seed, trial_index)
        self._buf = np.empty(0)
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= self._buf.shape[0]:
            self._buf = self._gen.random(_CHUNK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms as an array (continues the same stream)."""
        out = np.empty(n)
        avail = self._buf.shape[0] - self._pos
        take = min(avail, n)
        if take:
            out[:take] = self._buf[self._pos : self._pos + take]
            self._pos += take
        if take < n:
            out[take:] = self._gen.random(n - take)
        return out


def sample_index(dist: Sequence[float], stream: TrialStream) -> int:
    """Draw an action index from ``dist`` under the shared draw discipline."""
    m = len(dist)
    for k in range(m):
        if dist[k] == 1.0:
            return k
    u = stream.uniform()
    c = 0.0
    for k in range(m - 1):
        c += dist[k]
        if u < c:
            return k
    return m - 1
