"""Counter-based random streams.

Every stochastic routine in the package draws from a Philox generator keyed
by (seed, stream ids).  Streams are independent of execution order and thread
count, which is what makes the reports byte-reproducible.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_FNV_PRIME = 0x100000001B3
_FNV_OFFSET = 0xCBF29CE484222325


def _mix(ids: tuple[int, ...]) -> int:
    h = _FNV_OFFSET
    for x in ids:
        h = ((h ^ (int(x) & _MASK64)) * _FNV_PRIME) & _MASK64
    return h


def stream(seed: int, *ids: int) -> np.random.Generator:
    """Return the generator for a named substream of `seed`.

    The same (seed, ids) always yields the same stream, regardless of how
    many other streams were consumed before it.
    """
    key = np.array([int(seed) & _MASK64, _mix(ids)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
