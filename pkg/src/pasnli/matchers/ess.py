"""Enumerative sphere shaping, optionally with a fourth-moment bound (K-ESS).

Node counts are exact Python integers.  A trellis node at position ``i`` is
the accumulated state ``(sum a^2, sum q(a))`` of the first ``i`` amplitudes
and stores the number of admissible completions.  ``q(a) = ceil(a^4 / r)``
for a fourth-moment resolution ``r``; the second entry is always 0 without
a fourth-moment bound.  Bounding ``sum q(a) <= floor(M4_max / r)`` implies
``sum a^4 <= M4_max``, and ``r = 1`` is the exact fourth-moment trellis.
Sequences are ranked lexicographically with the alphabet in increasing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..shaping_core import bits_to_int, int_to_bits
from .ccdm import DecodeError, _amplitude_index


class EmptyCodebookError(ValueError):
    pass


@dataclass(frozen=True)
class EssTrellis:
    blocklength: int
    alphabet: tuple
    e_max: int
    m4_max: int | None
    levels: tuple  # levels[i]: dict state -> completions
    m4_resolution: int = 1

    @property
    def size(self) -> int:
        return self.levels[0].get((0, 0), 0)

    @property
    def k(self) -> int:
        return self.size.bit_length() - 1

    def steps(self):
        return _steps(self.alphabet, self.m4_max is not None, self.m4_resolution)

    def to_json(self) -> dict:
        return {
            "version": 1,
            "kind": "kess" if self.m4_max is not None else "ess",
            "alphabet": list(self.alphabet),
            "blocklength": self.blocklength,
            "e_max": self.e_max,
            "m4_max": self.m4_max,
            "m4_resolution": self.m4_resolution,
            "levels": [
                [[e, q, str(c)] for (e, q), c in sorted(level.items())] for level in self.levels
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EssTrellis":
        if obj.get("version") != 1 or obj.get("kind") not in ("ess", "kess"):
            raise ValueError("unsupported trellis cache entry")
        levels = tuple({(e, q): int(c) for e, q, c in lv} for lv in obj["levels"])
        return cls(
            obj["blocklength"], tuple(obj["alphabet"]), obj["e_max"], obj["m4_max"], levels,
            obj.get("m4_resolution", 1),
        )


def _fourth(a: int, resolution: int) -> int:
    return -(-(a**4) // resolution)


def _steps(alphabet, use_q: bool, resolution: int):
    return [(a * a, _fourth(a, resolution) if use_q else 0) for a in alphabet]


def build_ess_trellis(
    blocklength: int, alphabet, e_max: int, m4_max: int | None = None, m4_resolution: int = 1
) -> EssTrellis:
    """Trellis of all sequences with ``sum a^2 <= e_max`` (and the fourth-moment bound)."""
    alphabet = tuple(sorted(int(a) for a in alphabet))
    use_q = m4_max is not None
    q_cap = m4_max // m4_resolution if use_q else 0
    steps = _steps(alphabet, use_q, m4_resolution)
    e_floor, q_floor = steps[0]
    if e_max < blocklength * e_floor or q_cap < blocklength * q_floor:
        raise EmptyCodebookError("no sequence satisfies the bounds")

    reach = [{(0, 0)}]
    for i in range(blocklength):
        rest = blocklength - i - 1
        nxt = set()
        for e, q in reach[-1]:
            for de, dq in steps:
                e2, q2 = e + de, q + dq
                if e2 + rest * e_floor <= e_max and q2 + rest * q_floor <= q_cap:
                    nxt.add((e2, q2))
        reach.append(nxt)

    levels = [None] * (blocklength + 1)
    levels[blocklength] = {s: 1 for s in reach[blocklength]}
    for i in range(blocklength - 1, -1, -1):
        after = levels[i + 1]
        level = {}
        for e, q in reach[i]:
            total = 0
            for de, dq in steps:
                total += after.get((e + de, q + dq), 0)
            if total:
                level[(e, q)] = total
        levels[i] = level
    if not levels[0]:
        raise EmptyCodebookError("no sequence satisfies the bounds")
    return EssTrellis(
        blocklength, alphabet, int(e_max), None if m4_max is None else int(m4_max), tuple(levels),
        int(m4_resolution),
    )


def ess_unrank(index: int, trellis: EssTrellis) -> np.ndarray:
    if not 0 <= index < trellis.size:
        raise ValueError("index out of range")
    steps = trellis.steps()
    state = (0, 0)
    out = np.empty(trellis.blocklength, dtype=np.int64)
    for i in range(trellis.blocklength):
        after = trellis.levels[i + 1]
        for j, (de, dq) in enumerate(steps):
            nxt = (state[0] + de, state[1] + dq)
            c = after.get(nxt, 0)
            if index < c:
                out[i] = trellis.alphabet[j]
                state = nxt
                break
            index -= c
    return out


def ess_rank(block, trellis: EssTrellis) -> int:
    idx = _amplitude_index(block, trellis.alphabet)
    if len(idx) != trellis.blocklength:
        raise DecodeError("block length mismatch")
    steps = trellis.steps()
    state = (0, 0)
    index = 0
    for i, sym in enumerate(idx):
        after = trellis.levels[i + 1]
        for j in range(sym):
            index += after.get((state[0] + steps[j][0], state[1] + steps[j][1]), 0)
        state = (state[0] + steps[sym][0], state[1] + steps[sym][1])
        if state not in after:
            raise DecodeError("block violates the trellis bounds")
    return index


def ess_encode(bits, trellis: EssTrellis) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if len(bits) != trellis.k:
        raise ValueError(f"expected {trellis.k} bits, got {len(bits)}")
    return ess_unrank(bits_to_int(bits), trellis)


def ess_decode(block, trellis: EssTrellis) -> np.ndarray:
    index = ess_rank(block, trellis)
    if index >= 2**trellis.k:
        raise DecodeError("block lies outside the codebook")
    return int_to_bits(index, trellis.k)


def energy_enumerator(blocklength: int, alphabet) -> dict:
    """Exact number of sequences for every total energy ``sum a^2``."""
    dist = {0: 1}
    for _ in range(blocklength):
        nxt = {}
        for e, c in dist.items():
            for a in alphabet:
                nxt[e + a * a] = nxt.get(e + a * a, 0) + c
        dist = nxt
    return dict(sorted(dist.items()))


def min_energy_for_capacity(blocklength: int, alphabet, k: int) -> int:
    """Smallest sphere bound whose ESS codebook carries ``k`` bits."""
    cum = 0
    for e, c in energy_enumerator(blocklength, alphabet).items():
        cum += c
        if cum >= 2**k:
            return e
    raise EmptyCodebookError(f"{k} bits exceed {blocklength} amplitudes")


def _joint_moment_counts(blocklength: int, alphabet, e_cap: int, resolution: int) -> dict:
    amin2 = min(alphabet) ** 2
    fourth = {a: _fourth(a, resolution) for a in alphabet}
    dist = {(0, 0): 1}
    for i in range(blocklength):
        rest = blocklength - i - 1
        nxt = {}
        for (e, q), c in dist.items():
            for a in alphabet:
                e2 = e + a * a
                if e2 + rest * amin2 > e_cap:
                    continue
                key = (e2, q + fourth[a])
                nxt[key] = nxt.get(key, 0) + c
        dist = nxt
    return dist


def kess_bounds(blocklength: int, alphabet, k: int, discard_fraction: float = 0.5, m4_resolution: int = 1):
    """(E_max, M4_max) for a K-ESS codebook of at least ``2^k`` sequences.

    For each candidate sphere bound, the fourth-moment bound discards (at
    least) ``discard_fraction`` of the sphere's sequences with the largest
    (quantized) fourth moment; the smallest sphere bound that still carries
    ``k`` bits wins.  M4_max is returned in units of ``a^4``.
    """
    if not 0 <= discard_fraction < 1:
        raise ValueError("discard_fraction must be in [0, 1)")
    alphabet = sorted(alphabet)
    extra = max(1, math.ceil(-math.log2(1 - discard_fraction)))
    e_cap = min_energy_for_capacity(blocklength, alphabet, k + extra + 2)
    while True:
        joint = _joint_moment_counts(blocklength, alphabet, e_cap, m4_resolution)
        energies = sorted({e for e, _ in joint})
        for e_bound in energies:
            qs = {}
            for (e, q), c in joint.items():
                if e <= e_bound:
                    qs[q] = qs.get(q, 0) + c
            total = sum(qs.values())
            keep_target = total - math.floor(discard_fraction * total)
            cum = 0
            for q in sorted(qs):
                cum += qs[q]
                if cum >= keep_target:
                    m4 = q
                    break
            if cum >= 2**k:
                return e_bound, m4 * m4_resolution
        e_cap += 8 * blocklength


def default_m4_resolution(blocklength: int, alphabet) -> int:
    """Exact fourth moments for short blocks, coarser steps when the state space grows.

    ``(max a)^4 / 12`` keeps roughly a dozen distinct fourth-moment steps per
    amplitude, which bounds the trellis to a few hundred thousand states per
    position for 8 amplitudes at ``l ~ 100``.
    """
    if blocklength <= 16:
        return 1
    return max(1, max(alphabet) ** 4 // 12)


@dataclass(frozen=True)
class EssShaper:
    trellis: EssTrellis

    @classmethod
    def for_rate(cls, blocklength: int, alphabet, k: int) -> "EssShaper":
        e_max = min_energy_for_capacity(blocklength, alphabet, k)
        return cls(build_ess_trellis(blocklength, alphabet, e_max))

    @classmethod
    def kess_for_rate(
        cls, blocklength: int, alphabet, k: int, discard_fraction: float = 0.5, m4_resolution=None
    ) -> "EssShaper":
        if m4_resolution is None:
            m4_resolution = default_m4_resolution(blocklength, alphabet)
        e_max, m4 = kess_bounds(blocklength, alphabet, k, discard_fraction, m4_resolution)
        return cls(build_ess_trellis(blocklength, alphabet, e_max, m4, m4_resolution))

    @property
    def blocklength(self) -> int:
        return self.trellis.blocklength

    @property
    def alphabet(self) -> tuple:
        return self.trellis.alphabet

    @property
    def k(self) -> int:
        return self.trellis.k

    def encode(self, bits) -> np.ndarray:
        return ess_encode(bits, self.trellis)

    def decode(self, block) -> np.ndarray:
        return ess_decode(block, self.trellis)

    def amplitude_distribution(self) -> np.ndarray:
        """Exact marginal amplitude distribution over the 2^k used sequences."""
        return codebook_amplitude_counts(self.trellis, 2**self.k) / (2**self.k * self.blocklength)


def codebook_amplitude_counts(trellis: EssTrellis, n_used: int) -> np.ndarray:
    """Occurrences of each amplitude among the sequences of rank < ``n_used``.

    The used set splits into complete subtrees hanging left of the path of
    the sequence with rank ``n_used``.  ``below`` counts prefixes strictly
    left of that path, each of which contributes all of its completions.
    """
    tr = trellis
    steps = tr.steps()
    K = len(steps)
    occ = [0] * K
    if n_used == tr.size:
        below, path, left = {(0, 0): 1}, None, 0
    else:
        below, path, left = {}, ess_unrank(n_used, tr), n_used
    bstate = (0, 0)
    for i in range(tr.blocklength):
        after = tr.levels[i + 1]
        nxt = {}
        for s, w in below.items():
            for j, (de, dq) in enumerate(steps):
                s2 = (s[0] + de, s[1] + dq)
                c = after.get(s2)
                if c:
                    occ[j] += w * c
                    nxt[s2] = nxt.get(s2, 0) + w
        if path is not None:
            bj = tr.alphabet.index(int(path[i]))
            for j in range(bj):
                s2 = (bstate[0] + steps[j][0], bstate[1] + steps[j][1])
                c = after.get(s2)
                if c:
                    occ[j] += c
                    nxt[s2] = nxt.get(s2, 0) + 1
                    left -= c
            # used sequences sharing the path prefix through position i
            occ[bj] += left
            bstate = (bstate[0] + steps[bj][0], bstate[1] + steps[bj][1])
        below = nxt
    return np.array([float(o) for o in occ])
