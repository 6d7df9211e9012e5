"""Seeded randomness.

Every random draw in the package flows through a SeededRng, which is a thin
wrapper around numpy's counter-based Philox generator that remembers the seed
it was created from.  Remembering the seed lets builders stamp their outputs
(problems, preconditioners) with enough metadata to replay the exact draws.

Batch work derives one child seed per trial with a splitmix64-style avalanche
hash, so trials get decorrelated streams without any coordination.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(x):
    """One round of the splitmix64 avalanche hash (64-bit in, 64-bit out)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def derive_seed(base_seed, index):
    """Child seed for trial `index` under `base_seed`; avalanche-mixed."""
    return splitmix64((int(base_seed) & MASK64) ^ splitmix64(int(index)))


class SeededRng:
    """A Philox-backed generator that knows its own seed.

    The `gen` attribute is a plain numpy Generator; draw from it directly.
    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self.gen = np.random.Generator(np.random.Philox(self.seed))

    def spawn(self, index):
        """Independent child stream for a numbered trial."""
        return SeededRng(derive_seed(self.seed, index))

    def __repr__(self):
        return "SeededRng(seed=%d)" % self.seed


def make_rng(seed):
    return SeededRng(seed)
