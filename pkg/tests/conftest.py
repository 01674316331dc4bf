import numpy as np
import pytest

from devlab import adjacent_ones, random_walk


def adj_history(bits):
    """Full action-profile history from realized bits (off-turn null = 0)."""
    out = []
    for t, b in enumerate(bits):
        out.append((b, 0) if (t + 1) % 2 == 1 else (0, b))
    return tuple(out)


def walk_history(moves):
    """Full history from realized moves in {-1, +1}."""
    out = []
    for t, mv in enumerate(moves):
        idx = 0 if mv == -1 else 1
        out.append((idx, 0) if (t + 1) % 2 == 1 else (0, idx))
    return tuple(out)


def random_trace(rng, rounds, start=10):
    a = rng.choice((-1, 1), size=rounds).astype(np.int64)
    b = rng.choice((-1, 1), size=rounds).astype(np.int64)
    return random_walk.WalkTrace(a, b, start)


@pytest.fixture(scope="session")
def worker_threads():
    import os

    return min(8, os.cpu_count() or 1)
