"""Counter-based deterministic randomness.

Thread scheduling must never perturb random draws, so there is no stateful
generator anywhere in the solver.  Every draw is a pure function of structural
integers (seed, round, worker, trial, variable index, ...) hashed through
blake2b.  The same key always yields the same number, on any platform.
"""

from __future__ import annotations

import hashlib

_SCALE = float(1 << 53)


def _digest(*keys: int) -> bytes:
    h = hashlib.blake2b(digest_size=8)
    for k in keys:
        h.update(int(k).to_bytes(8, "little", signed=True))
    return h.digest()


def uniform01(*keys: int) -> float:
    """Deterministic draw in [0, 1) keyed by a tuple of integers."""
    raw = int.from_bytes(_digest(*keys), "little")
    return (raw >> 11) / _SCALE


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit sub-seed from a tuple of integers."""
    return int.from_bytes(_digest(*keys), "little") >> 1
