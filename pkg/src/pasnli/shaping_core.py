"""Constellations, Maxwell-Boltzmann amplitude distributions and PAS rate bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class ShapingError(ValueError):
    """Raised for inconsistent shaping parameters."""


def gray_code(index: int) -> int:
    return index ^ (index >> 1)


def int_to_bits(value: int, width: int) -> np.ndarray:
    """MSB-first bit vector of ``value``."""
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    value = 0
    for b in np.asarray(bits, dtype=np.uint8).ravel():
        value = (value << 1) | int(b)
    return value


@dataclass(frozen=True)
class ShapedConstellation:
    """Square QAM built from two 2^m-ary PAM dimensions.

    Amplitudes are the odd integers ``1, 3, ..., 2^m - 1`` multiplied by
    ``scale``.  Each PAM label is ``m`` bits: the sign bit first (1 means a
    negative symbol) followed by the reflected-binary code of the amplitude
    index.
    """

    bits_per_pam: int
    scale: float = 1.0

    def __post_init__(self):
        if self.bits_per_pam < 2:
            raise ShapingError("bits_per_pam must be >= 2")
        if not self.scale > 0:
            raise ShapingError("scale must be positive")

    @property
    def n_amplitudes(self) -> int:
        return 2 ** (self.bits_per_pam - 1)

    @property
    def amplitude_alphabet(self) -> np.ndarray:
        return np.arange(1, 2 * self.n_amplitudes, 2)

    @property
    def amplitude_labels(self) -> np.ndarray:
        """(n_amplitudes, m-1) array of reflected-binary labels."""
        w = self.bits_per_pam - 1
        return np.array([int_to_bits(gray_code(i), w) for i in range(self.n_amplitudes)])

    def pam_points(self) -> np.ndarray:
        """Unscaled PAM points in increasing order."""
        a = self.amplitude_alphabet
        return np.concatenate([-a[::-1], a])

    def pam_labels(self) -> np.ndarray:
        """(2^m, m) labels aligned with :meth:`pam_points`."""
        lab = self.amplitude_labels
        neg = np.hstack([np.ones((len(lab), 1), dtype=np.uint8), lab[::-1]])
        pos = np.hstack([np.zeros((len(lab), 1), dtype=np.uint8), lab])
        return np.vstack([neg, pos])

    def with_scale(self, scale: float) -> "ShapedConstellation":
        return ShapedConstellation(self.bits_per_pam, scale)


@dataclass(frozen=True)
class AmplitudeDistribution:
    probabilities: np.ndarray
    mb_lambda: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ShapingError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def entropy(self) -> float:
        return entropy(self.probabilities)

    def second_moment(self, alphabet) -> float:
        return float(np.dot(self.probabilities, np.asarray(alphabet, dtype=float) ** 2))


def entropy(p) -> float:
    """Entropy in bits with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def maxwell_boltzmann(alphabet, lam: float) -> np.ndarray:
    a2 = np.asarray(alphabet, dtype=float) ** 2
    w = np.exp(-lam * (a2 - a2.min()))
    return w / w.sum()


def fit_mb_lambda(target_entropy: float, alphabet, tol: float = 1e-12) -> AmplitudeDistribution:
    """Maxwell-Boltzmann distribution on ``alphabet`` with the requested entropy.

    The entropy decreases monotonically in the MB parameter, so the parameter
    is found by bisection.
    """
    alphabet = np.asarray(alphabet)
    h_max = math.log2(len(alphabet))
    if not 0 < target_entropy <= h_max + 1e-12:
        raise ShapingError(f"target entropy {target_entropy} outside (0, {h_max}]")
    if target_entropy >= h_max - 1e-13:
        return AmplitudeDistribution(np.full(len(alphabet), 1.0 / len(alphabet)), 0.0)

    def gap(lam):
        return entropy(maxwell_boltzmann(alphabet, lam)) - target_entropy

    lo, hi = 0.0, 1.0
    while gap(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise ShapingError("could not bracket MB parameter")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    lam = 0.5 * (lo + hi)
    return AmplitudeDistribution(maxwell_boltzmann(alphabet, lam), lam)


def rate_loss(entropy_bits: float, k: int, blocklength: int, v: int = 0) -> float:
    """Shaping rate loss ``H(P_a) - (k - v) / l`` in bits per amplitude."""
    if not 0 <= v <= k:
        raise ShapingError("need 0 <= v <= k")
    loss = entropy_bits - (k - v) / blocklength
    if loss < 0:
        if loss > -1e-12:
            return 0.0
        raise ShapingError(f"k={k} exceeds what the distribution supports (loss {loss:.3g})")
    return loss


def sign_info_fraction(bits_per_pam: int, code_rate: float) -> float:
    """Fraction of sign bits carrying information for a PAS code of ``code_rate``."""
    return bits_per_pam * code_rate - (bits_per_pam - 1)


@dataclass(frozen=True)
class PasRates:
    shaping_rate: float
    sign_info_fraction: float
    rate_loss: float = 0.0
    flipping_bits: int = 0
    overall_rate: float = field(init=False)

    def __post_init__(self):
        if not 0 <= self.sign_info_fraction <= 1:
            raise ShapingError("sign_info_fraction must be in [0, 1]")
        if self.rate_loss < 0:
            raise ShapingError("rate loss must be nonnegative")
        object.__setattr__(self, "overall_rate", self.shaping_rate + self.sign_info_fraction)

    @property
    def rate_per_qam_symbol(self) -> float:
        return 2.0 * self.overall_rate


def assemble_pam(amplitudes, signs, scale: float = 1.0) -> np.ndarray:
    a = np.asarray(amplitudes, dtype=float)
    s = np.asarray(signs)
    if a.shape != s.shape:
        raise ShapingError(f"length mismatch: {a.shape} amplitudes vs {s.shape} signs")
    return np.where(s.astype(bool), -a, a) * scale


def sign_source(count: int, seed) -> np.ndarray:
    """Uniform i.i.d. sign bits standing in for systematic parity bits."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def scale_for_power(dist: AmplitudeDistribution, alphabet, power: float, dims: int = 2) -> float:
    """Scale giving mean symbol energy ``power`` for ``dims`` PAM dimensions per symbol."""
    return math.sqrt(power / (dims * dist.second_moment(alphabet)))


def dbm_to_watt(dbm: float) -> float:
    return 1e-3 * 10 ** (dbm / 10)


def watt_to_dbm(w: float) -> float:
    return 10 * math.log10(w / 1e-3)


def binary_entropy(p: float) -> float:
    return entropy([p, 1 - p])


def invert_binary_entropy(h: float) -> float:
    """p <= 1/2 with binary entropy ``h``; used as a cross-check."""
    return brentq(lambda p: binary_entropy(p) - h, 1e-15, 0.5, xtol=1e-15)
