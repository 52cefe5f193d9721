"""
Random number generation helpers.

Every sampler in netreg draws from ``numpy.random.Philox``, a counter-based
64-bit generator, seeded explicitly. Seeds for independent jobs are derived
from a base seed and integer keys through ``numpy.random.SeedSequence``.
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return a Philox-backed generator for ``seed``."""
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(base_seed: int, *keys: int) -> int:
    """
    Derive a 32-bit child seed from a base seed and integer keys.

    The result depends only on the inputs, so replaying an experiment
    cell reproduces its random stream exactly.
    """
    sequence = np.random.SeedSequence([int(base_seed), *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
