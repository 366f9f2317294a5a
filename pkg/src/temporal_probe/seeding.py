"""Seed derivation. Every source of randomness in the toolkit draws from a
generator built here, keyed by (run seed, purpose, ...), so independent
purposes (weight init, batch sampling, shuffles, augmentation) live on
disjoint streams and stay reproducible."""

from __future__ import annotations

import numpy as np

# Purpose tags. Keeping augmentation/shuffle draws off the training stream is
# load-bearing: an augmentation config with p=0 must be bitwise identical to
# no augmentation at all.
SPLITS = 0
INIT = 1
TRAIN = 2
SHUFFLE = 3
AUGMENT = 4
SYNTH = 5

_MASK64 = (1 << 64) - 1


def rng_for(*key: int) -> np.random.Generator:
    """PCG64 generator derived from an integer key tuple."""
    entropy = [int(k) & _MASK64 for k in key]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def combine_seed(*key: int) -> int:
    """Collapse a key tuple into one 64-bit seed (for per-fold worker seeds)."""
    entropy = [int(k) & _MASK64 for k in key]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
