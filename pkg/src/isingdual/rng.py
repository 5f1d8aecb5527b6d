"""Counter-based SplitMix64 streams.

Every random stream in the package that must be reproducible across
implementations is derived from ``splitmix64``: the ``i``-th output of a
stream with seed ``s`` is ``mix(s + (i + 1) * GOLDEN)``, with the standard
SplitMix64 finalizer constants below.  Uniform doubles use the top 53 bits.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer applied to ``x + GOLDEN`` (one generator step)."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized ``splitmix64(seed + counter * GOLDEN)`` over uint64 counters."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + (c + np.uint64(1)) * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, start: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) from positions ``start, start+1, ...``."""
    z = splitmix64_array(seed, np.arange(start, start + count, dtype=np.uint64))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(root: int, index: int) -> int:
    """Per-task seed: root seed plus task index through one SplitMix64 step."""
    return splitmix64((root + index * GOLDEN) & MASK64)
