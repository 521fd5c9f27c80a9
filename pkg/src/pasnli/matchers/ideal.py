"""Ideal amplitude shaper: i.i.d. draws from a target distribution."""

from __future__ import annotations

import numpy as np


def ideal_as(p, blocklength: int, seed, alphabet=None) -> np.ndarray:
    """One block of ``blocklength`` i.i.d. amplitudes drawn from ``p``."""
    p = np.asarray(p, dtype=float)
    alphabet = np.arange(1, 2 * len(p), 2) if alphabet is None else np.asarray(alphabet)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return alphabet[rng.choice(len(p), size=blocklength, p=p)]


class IdealShaper:
    """Stateful i.i.d. shaper with the same ``next_block`` interface as the others."""

    def __init__(self, p, blocklength: int, alphabet=None, seed=None):
        self.p = np.asarray(p, dtype=float)
        self.blocklength = blocklength
        self.alphabet = tuple(np.arange(1, 2 * len(self.p), 2) if alphabet is None else alphabet)
        self.rng = np.random.default_rng(seed)

    def next_block(self) -> np.ndarray:
        return ideal_as(self.p, self.blocklength, self.rng, self.alphabet)
