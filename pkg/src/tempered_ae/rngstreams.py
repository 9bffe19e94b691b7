"""Deterministic RNG stream splitting for the replica ensemble.

Every stochastic component of a run (each replica, the swap coordinator,
dataset/weight initialization) owns an independent numpy Generator whose
seed is derived from the master seed through a 64-bit finalizer.  Adding
replicas therefore never perturbs existing streams, and single-threaded
and worker-pool execution consume identical random numbers.
"""

import numpy as np

_MASK = (1 << 64) - 1

# Stream tags sit far above any plausible replica count so replica ids
# can never collide with them.
SWAP_STREAM = 1 << 40
INIT_STREAM = 2 << 40


def mix64(x: int) -> int:
    """SplitMix64 finalizer: map an integer to a well-scrambled 64-bit seed."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return (z ^ (z >> 31)) & _MASK


def stream(seed: int, tag: int) -> np.random.Generator:
    """Generator for the stream identified by ``tag`` under ``seed``."""
    return np.random.Generator(np.random.PCG64(mix64((seed + tag) & _MASK)))


def replica_stream(seed: int, replica_id: int) -> np.random.Generator:
    return stream(seed, replica_id)
