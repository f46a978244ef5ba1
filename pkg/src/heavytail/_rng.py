"""Deterministic random-stream derivation.

Every stochastic routine in the package is addressed by an integer seed
plus a role: the pair is hashed into a 64-bit key, and the key either
seeds a counter-based NumPy ``Generator`` (for vectorised Python-level
sampling) or initialises one xoshiro256++ state per replica inside the
compiled kernels.  Replica streams depend only on ``(seed, role, replica
index)``, never on how replicas are batched across workers, which is
what makes ensemble output independent of the worker count.

The mixing function is SplitMix64, evaluated here on Python integers
masked to 64 bits so the values agree bit for bit with the uint64
arithmetic used by both kernel backends.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(z: int) -> int:
    """One SplitMix64 scramble of a 64-bit value (pure function)."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *salts: int) -> int:
    """Hash a master seed and a sequence of integer salts into a stream key.

    The chain is ``key <- splitmix64(key XOR splitmix64(salt * GOLDEN + 1))``
    per salt, so distinct salt sequences yield (for all practical
    purposes) unrelated keys.  Accepts arbitrary Python integers; they
    are reduced mod 2**64.
    """
    key = splitmix64(seed & MASK64)
    for salt in salts:
        key = splitmix64(key ^ splitmix64((salt * GOLDEN + 1) & MASK64))
    return key


def role_key(seed: int, role: str) -> int:
    """Derive a key for a named role, e.g. ``role_key(seed, "ensemble")``.

    The role string is folded bytewise into salts so that different
    roles draw from unrelated streams even under a shared seed.
    """
    data = role.encode("utf-8")
    acc = len(data)
    for i, b in enumerate(data):
        acc = (acc * 0x100000001B3 + b + i) & MASK64
    return derive_key(seed, acc)


def generator(seed: int, role: str, index: int = 0) -> np.random.Generator:
    """A NumPy ``Generator`` (Philox) for Python-level vector sampling.

    Philox is counter based and platform stable, so draws are
    reproducible everywhere.  ``index`` separates replicas or chunks
    under the same role.
    """
    key = derive_key(role_key(seed, role), index)
    return np.random.Generator(np.random.Philox(key=key))


def replica_key(base_key: int, index: int) -> int:
    """Per-replica kernel key; must match the in-kernel derivation."""
    return splitmix64((base_key ^ splitmix64((index * GOLDEN + 1) & MASK64)) & MASK64)


def stream_state(key: int) -> tuple[int, int, int, int]:
    """Initial xoshiro256++ state words for a stream key.

    Four successive SplitMix64 outputs, the standard recommendation for
    seeding xoshiro-family generators.  Must match the in-kernel
    ``_stream_init`` in both backends.
    """
    s0 = splitmix64(key)
    s1 = splitmix64((key + GOLDEN) & MASK64)
    s2 = splitmix64((key + 2 * GOLDEN) & MASK64)
    s3 = splitmix64((key + 3 * GOLDEN) & MASK64)
    return s0, s1, s2, s3
