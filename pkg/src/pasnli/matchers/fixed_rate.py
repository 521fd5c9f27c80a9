"""Shapers used at a prescribed number of input bits."""

from __future__ import annotations

import numpy as np

from ..shaping_core import fit_mb_lambda
from .ccdm import CcdmShaper, DecodeError, ccdm_capacity, quantize_composition
from .ess import EssShaper, codebook_amplitude_counts


def ccdm_for_rate(blocklength: int, alphabet, k: int, iterations: int = 60) -> CcdmShaper:
    """Lowest-energy MB-quantized composition whose capacity is at least ``k`` bits.

    Bisects the target entropy of the MB distribution between ``k / l`` and
    the uniform entropy.
    """
    alphabet = tuple(int(a) for a in alphabet)
    hmax = float(np.log2(len(alphabet)))

    def comp(h):
        return quantize_composition(fit_mb_lambda(h, alphabet).probabilities, blocklength)

    best = comp(hmax)
    if ccdm_capacity(best) < k:
        raise ValueError(f"no composition of length {blocklength} carries {k} bits")
    lo, hi = min(k / blocklength, hmax), hmax
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        c = comp(mid)
        if ccdm_capacity(c) >= k:
            hi, best = mid, c
        else:
            lo = mid
    return CcdmShaper(tuple(int(x) for x in best), alphabet)


class FixedRateShaper:
    """Wrap a shaper of capacity ``inner.k >= k`` so it takes exactly ``k`` bits.

    The missing leading bits are fixed to zero, so only the ``2^k``
    lowest-index codewords are used.
    """

    def __init__(self, inner, k: int):
        if k > inner.k:
            raise ValueError(f"shaper carries {inner.k} bits, {k} requested")
        self.inner = inner
        self.k = int(k)
        self.pad = inner.k - self.k

    @property
    def blocklength(self) -> int:
        return self.inner.blocklength

    @property
    def alphabet(self) -> tuple:
        return tuple(self.inner.alphabet)

    def encode(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if len(bits) != self.k:
            raise ValueError(f"expected {self.k} bits, got {len(bits)}")
        return self.inner.encode(np.concatenate([np.zeros(self.pad, dtype=np.uint8), bits]))

    def decode(self, block) -> np.ndarray:
        bits = self.inner.decode(block)
        if bits[: self.pad].any():
            raise DecodeError("block lies outside the used codebook")
        return bits[self.pad:]

    def amplitude_distribution(self) -> np.ndarray:
        """Marginal amplitude distribution over the used codewords."""
        if isinstance(self.inner, CcdmShaper):
            return self.inner.probabilities
        if isinstance(self.inner, EssShaper):
            n = 2**self.k
            return codebook_amplitude_counts(self.inner.trellis, n) / (n * self.blocklength)
        raise TypeError(f"no amplitude distribution for {type(self.inner).__name__}")


def ideal_distribution(rate: float, alphabet) -> np.ndarray:
    """MB distribution whose entropy equals the shaping rate (no rate loss)."""
    return fit_mb_lambda(rate, alphabet).probabilities
