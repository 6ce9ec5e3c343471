"""Deterministic seed derivation.

Child seeds are derived by folding a role tag and integer indices into a
base seed with splitmix64 steps, so distinct roles/indices get decorrelated
streams and reruns with the same base seed reproduce every stream exactly.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _fold(state: int, value: int) -> int:
    return _splitmix64((state ^ (value & _MASK)) & _MASK)


def derive_seed(base_seed: int, role: str, *indices: int) -> int:
    """Mix (base_seed, role, indices) into a 64-bit child seed."""
    state = _fold(base_seed & _MASK, 0)
    for byte in role.encode("utf-8"):
        state = _fold(state, byte)
    for index in indices:
        state = _fold(state, index)
    return state


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a (usually derived) 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK))


def spawn_rng(base_seed: int, role: str, *indices: int) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed`."""
    return make_rng(derive_seed(base_seed, role, *indices))
