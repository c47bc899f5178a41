"""Deterministic random streams.

Every stochastic operation in the package takes an explicit ``RngStream``;
nothing touches global RNG state. Identical seeds produce identical
sequences across runs and platforms (PCG64 is platform-independent).
Streams are not shareable between threads; create one per thread.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "pcg64"


class RngStream:
    """Seeded random generator with a fixed, documented algorithm tag."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.algorithm = ALGORITHM
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def clone(self) -> "RngStream":
        """Fresh stream at the initial state of the same seed."""
        return RngStream(self.seed)

    def child(self, key: int) -> "RngStream":
        """Derived stream; deterministic in (seed, key)."""
        return RngStream(self.seed * 1_000_003 + int(key))

    # Thin pass-throughs; keep the set small and explicit.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def random(self, size=None):
        return self._gen.random(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def choice(self, a, size=None, p=None):
        return self._gen.choice(a, size=size, p=p)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def dirichlet(self, alpha, size=None):
        return self._gen.dirichlet(alpha, size)
