"""Seeding helpers.

Every random step draws from numpy's PCG64 bit generator (PCG-XSL-RR 128/64),
whose output stream is fixed by the seed on every platform.  Child seeds for
resamples, trees and balancing steps are derived with ``SeedSequence`` hashing
of ``(base seed, ordinal, ...)`` so the result never depends on the order in
which parallel tasks happen to run.
"""
import numpy as np

MASK64 = (1 << 64) - 1


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def derive_seed(base, *ordinals):
    """Mix a base seed with one or more non-negative ordinals into a new 64-bit seed."""
    ss = np.random.SeedSequence(int(base) & MASK64, spawn_key=tuple(int(o) for o in ordinals))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
