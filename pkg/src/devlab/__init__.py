"""devlab: blame functions for prescribed strategy profiles.

Simulation and verification of deviation detection in sequential games:
who broke the prescribed randomized play when the target set is missed?
Includes two worked goals (adjacent-ones bits with decaying probabilities,
an alternating random walk that should reach the origin), the maximum
likelihood-ratio blame rule, an exact enumeration oracle for small
instances, and a reproducible Monte Carlo harness.
"""

from . import (
    adjacent_ones,
    core,
    deviations,
    exact_oracle,
    likelihood,
    montecarlo,
    random_walk,
)
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "adjacent_ones",
    "core",
    "deviations",
    "exact_oracle",
    "likelihood",
    "montecarlo",
    "random_walk",
    "KERNEL_BACKEND",
    "__version__",
]
