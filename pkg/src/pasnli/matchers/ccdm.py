"""Constant composition distribution matching by exact lexicographic ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..shaping_core import bits_to_int, int_to_bits

# int64 batch paths need every intermediate count below this
_INT64_SAFE = 2**62


class DecodeError(ValueError):
    pass


def multinomial(counts) -> int:
    """Exact ``n! / prod(c_i!)``."""
    total, out = 0, 1
    for c in counts:
        c = int(c)
        total += c
        out *= math.comb(total, c)
    return out


def quantize_composition(p, blocklength: int) -> np.ndarray:
    """Integer composition of ``blocklength`` approximating ``p``.

    Starts from rounding and then moves one unit at a time, choosing the
    change whose result has the smallest KL divergence to ``p``.
    """
    p = np.asarray(p, dtype=float)
    if blocklength < 1:
        raise ValueError("blocklength must be >= 1")
    counts = np.floor(blocklength * p + 0.5).astype(np.int64)

    def kl(c):
        q = c / c.sum()
        m = q > 0
        if np.any(p[m] == 0):
            return math.inf
        return float(np.sum(q[m] * np.log(q[m] / p[m])))

    while counts.sum() != blocklength:
        step = 1 if counts.sum() < blocklength else -1
        best, best_kl = None, math.inf
        for i in range(len(counts)):
            if counts[i] + step < 0:
                continue
            trial = counts.copy()
            trial[i] += step
            d = kl(trial) if trial.sum() > 0 else math.inf
            if d < best_kl:
                best, best_kl = i, d
        counts[best] += step
    return counts


def ccdm_capacity(composition) -> int:
    """Number of input bits, ``floor(log2 multinomial)``."""
    return multinomial(composition).bit_length() - 1


def unrank(index: int, composition) -> np.ndarray:
    """Sequence of symbol indices with lexicographic rank ``index``."""
    counts = [int(c) for c in composition]
    r = sum(counts)
    total = multinomial(counts)
    if not 0 <= index < total:
        raise ValueError("index out of range")
    out = np.empty(r, dtype=np.int64)
    for pos in range(r):
        for j, cj in enumerate(counts):
            if cj == 0:
                continue
            sub = total * cj // r
            if index < sub:
                out[pos] = j
                counts[j] -= 1
                total = sub
                break
            index -= sub
        r -= 1
    return out


def rank(sequence, composition) -> int:
    counts = [int(c) for c in composition]
    seq = np.asarray(sequence, dtype=np.int64)
    if len(seq) != sum(counts) or not np.array_equal(
        np.bincount(seq, minlength=len(counts)), counts
    ):
        raise DecodeError("sequence does not match the composition")
    r = len(seq)
    total = multinomial(counts)
    index = 0
    for sym in seq:
        for j in range(sym):
            if counts[j]:
                index += total * counts[j] // r
        total = total * counts[sym] // r
        counts[sym] -= 1
        r -= 1
    return index


def unrank_batch(indices, composition) -> np.ndarray:
    """Vectorized :func:`unrank` for compositions whose multinomial fits in int64."""
    counts0 = np.asarray(composition, dtype=np.int64)
    if multinomial(counts0) >= _INT64_SAFE // max(1, int(counts0.sum())):
        raise OverflowError("composition too large for the int64 batch path")
    idx = np.array(indices, dtype=np.int64, copy=True)
    n = idx.size
    K = len(counts0)
    counts = np.tile(counts0, (n, 1))
    total = np.full(n, multinomial(counts0), dtype=np.int64)
    r = int(counts0.sum())
    out = np.empty((n, r), dtype=np.int64)
    rows = np.arange(n)
    for pos in range(r):
        chosen = np.full(n, -1, dtype=np.int64)
        new_total = np.zeros(n, dtype=np.int64)
        for j in range(K):
            sub = total * counts[:, j] // (r - pos)
            take = (chosen < 0) & (counts[:, j] > 0) & (idx < sub)
            chosen[take] = j
            new_total[take] = sub[take]
            skip = (chosen < 0) & (counts[:, j] > 0)
            idx[skip] -= sub[skip]
        out[:, pos] = chosen
        counts[rows, chosen] -= 1
        total = new_total
    return out


def rank_batch(sequences, composition) -> np.ndarray:
    counts0 = np.asarray(composition, dtype=np.int64)
    seqs = np.asarray(sequences, dtype=np.int64)
    n, r = seqs.shape
    K = len(counts0)
    counts = np.tile(counts0, (n, 1))
    total = np.full(n, multinomial(counts0), dtype=np.int64)
    index = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    for pos in range(r):
        sym = seqs[:, pos]
        rem = r - pos
        for j in range(K):
            below = sym > j
            index[below] += total[below] * counts[below, j] // rem
        total = total * counts[rows, sym] // rem
        counts[rows, sym] -= 1
    return index


@dataclass(frozen=True)
class CcdmShaper:
    """Fixed-composition amplitude shaper operating on bit blocks."""

    composition: tuple
    alphabet: tuple

    def __post_init__(self):
        object.__setattr__(self, "composition", tuple(int(c) for c in self.composition))
        object.__setattr__(self, "alphabet", tuple(int(a) for a in self.alphabet))
        if len(self.composition) != len(self.alphabet):
            raise ValueError("composition and alphabet lengths differ")

    @classmethod
    def from_distribution(cls, p, blocklength, alphabet):
        return cls(tuple(quantize_composition(p, blocklength)), tuple(alphabet))

    @property
    def blocklength(self) -> int:
        return sum(self.composition)

    @property
    def k(self) -> int:
        return ccdm_capacity(self.composition)

    @property
    def probabilities(self) -> np.ndarray:
        return np.asarray(self.composition, dtype=float) / self.blocklength

    def encode(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if len(bits) != self.k:
            raise ValueError(f"expected {self.k} bits, got {len(bits)}")
        return np.asarray(self.alphabet)[unrank(bits_to_int(bits), self.composition)]

    def decode(self, block) -> np.ndarray:
        idx = _amplitude_index(block, self.alphabet)
        value = rank(idx, self.composition)
        if value >= 2**self.k:
            raise DecodeError("block lies outside the codebook")
        return int_to_bits(value, self.k)

    def to_json(self) -> dict:
        return {
            "version": 1,
            "kind": "ccdm",
            "alphabet": list(self.alphabet),
            "blocklength": self.blocklength,
            "composition": list(self.composition),
            "multinomial": str(multinomial(self.composition)),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CcdmShaper":
        if obj.get("version") != 1 or obj.get("kind") != "ccdm":
            raise ValueError("unsupported CCDM cache entry")
        return cls(tuple(obj["composition"]), tuple(obj["alphabet"]))


def _amplitude_index(block, alphabet) -> np.ndarray:
    lookup = {a: i for i, a in enumerate(alphabet)}
    try:
        return np.array([lookup[int(round(float(a)))] for a in np.asarray(block).ravel()], dtype=np.int64)
    except KeyError as exc:
        raise DecodeError(f"amplitude {exc.args[0]} not in alphabet") from None


def ccdm_encode(bits, composition, alphabet=None) -> np.ndarray:
    alphabet = alphabet if alphabet is not None else tuple(range(1, 2 * len(composition), 2))
    comp = tuple(composition)
    if ccdm_capacity(comp) == 0 and len(np.asarray(bits).ravel()):
        raise ValueError("composition carries no bits")
    return CcdmShaper(comp, tuple(alphabet)).encode(bits)


def ccdm_decode(block, composition, alphabet=None) -> np.ndarray:
    alphabet = alphabet if alphabet is not None else tuple(range(1, 2 * len(composition), 2))
    return CcdmShaper(tuple(composition), tuple(alphabet)).decode(block)
