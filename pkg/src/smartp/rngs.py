"""Reproducible RNG substreams.

Every stochastic routine in the package draws from a PCG64 generator keyed
by (seed, domain tag, *indices).  Work split into fixed-size chunks keyed
this way gives results that do not depend on execution order or on how
many workers process the chunks.
"""

from __future__ import annotations

import numpy as np

# domain tags keep substream families disjoint
MOMENTS = 101
TRIAL = 102
POWER = 103
MVN = 104

#: replicates per chunk for chunked Monte Carlo (fixed, not tunable: results
#: must not depend on it at runtime)
CHUNK = 65536


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by (seed, *key)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key)))
