"""Counter-based random substreams.

Every random number is a pure function of ``(seed, stream, *counters)``,
so draws can be generated in any order, in any number of chunks or
threads, and still come out bit-identical. The mixer is the SplitMix64
finalizer applied to a chained hash of the key components.
"""

import numpy as np
from scipy.special import ndtri

# stream tags; keep stable, they are part of the reproducibility contract
ELECTORATE = 1
PERCEPTION = 2
SURVEY_SELF = 3
SURVEY_PERCEPTION = 4
SURVEY_VOTE = 5
ELECTION_PERCEPTION = 6
ELECTION_VOTE = 7

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def hash_counters(seed, stream, *counters):
    """Return uint64 hashes broadcast over the counter arrays."""
    seed = check_seed(seed)
    with np.errstate(over="ignore"):
        h = _mix(np.atleast_1d(np.uint64(seed)) + _GOLDEN)
        h = _mix(h ^ _mix(np.uint64(stream) + _GOLDEN))
        for c in counters:
            c = np.asarray(c, dtype=np.uint64)
            h = _mix(h ^ _mix(c + _GOLDEN))
    return h


def uniforms(seed, stream, *counters):
    """Uniform(0, 1) variates, open at both ends."""
    h = hash_counters(seed, stream, *counters)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed, stream, *counters):
    """Standard normal variates by inverse-CDF transform of :func:`uniforms`."""
    return ndtri(uniforms(seed, stream, *counters))
