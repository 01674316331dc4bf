"""Kernel backend selection.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is missing or DEVLAB_FORCE_PYTHON_KERNELS is set.  Both
backends produce identical outputs (enforced by the test suite), so the
choice only affects speed.
"""

import os

from . import _py

BACKEND = "python"
adj_batch = _py.adj_batch
rw_scan = _py.rw_scan
rw_stats_batch = _py.rw_stats_batch

if not os.environ.get("DEVLAB_FORCE_PYTHON_KERNELS"):
    try:
        from . import _native

        BACKEND = "native"
        adj_batch = _native.adj_batch
        rw_scan = _native.rw_scan
        rw_stats_batch = _native.rw_stats_batch
    except ImportError:
        pass

K_HONEST = _py.K_HONEST
K_ALWAYS = _py.K_ALWAYS
K_BIASED = _py.K_BIASED
K_FIRST = _py.K_FIRST
K_DRIFT = _py.K_DRIFT
K_PIN = _py.K_PIN
K_REFLECT = _py.K_REFLECT
