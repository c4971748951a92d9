"""Seeded, splittable random streams.

Every replicate gets its own counter-based stream derived from
``(seed, replicate_index)`` so results do not depend on scheduling.
"""

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox(4x64-10) seeded by SeedSequence([seed, replicate])"


def replicate_rng(seed: int, replicate: int = 0) -> np.random.Generator:
    if seed is None:
        raise ValueError("an explicit seed is required")
    if seed < 0 or replicate < 0:
        raise ValueError("seed and replicate index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replicate)])))
