"""Shaped, optionally selected, multi-channel transmit frames."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..fiber.config import LinkSystemConfig
from ..mapping import DualPolFrame, blocks_per_group, map_amplitudes
from ..matchers import EssShaper, FixedRateShaper, ccdm_for_rate, ideal_distribution
from ..selection import SelectionConfig, greedy_wdm_select
from ..shaping_core import ShapedConstellation, entropy

SHAPER_TYPES = ("ccdm", "ess", "kess", "ideal")


def info_bits_per_block(rate: float, blocklength: int) -> int:
    return int(math.floor(rate * blocklength + 1e-9))


@lru_cache(maxsize=32)
def make_shaper(kind: str, blocklength: int, bits_per_pam: int, rate: float, v: int = 0):
    """Shaper taking ``floor(rate * l) + v`` bits per block of ``l`` amplitudes."""
    alphabet = tuple(int(a) for a in ShapedConstellation(bits_per_pam).amplitude_alphabet)
    k = info_bits_per_block(rate, blocklength) + v
    if kind == "ccdm":
        inner = ccdm_for_rate(blocklength, alphabet, k)
    elif kind == "ess":
        inner = EssShaper.for_rate(blocklength, alphabet, k)
    elif kind == "kess":
        inner = EssShaper.kess_for_rate(blocklength, alphabet, k)
    else:
        raise ValueError(f"no block shaper of type {kind!r}")
    return FixedRateShaper(inner, k)


def wdm_granularity(link: LinkSystemConfig) -> int:
    """Smallest frame length putting every channel offset on an FFT bin."""
    if link.n_channels == 1:
        return 1
    ratio = Fraction(str(link.wdm_spacing_ghz)) / Fraction(str(link.baud_rate_gbd))
    return ratio.denominator


def frame_length(n_symbols: int, slot: int, link: LinkSystemConfig) -> int:
    g = math.lcm(slot, wdm_granularity(link))
    return max(g, (n_symbols // g) * g)


@dataclass
class TransmitFrame:
    """Unit-scale frame ``(C, P, N)`` plus per-channel amplitude statistics."""

    frame: DualPolFrame
    amplitude_probs: np.ndarray   # (C, n_amplitudes) empirical
    rate_loss: np.ndarray         # (C,) bits per amplitude, including flipping bits
    info_rate: float              # information bits per amplitude
    evaluations: int = 0


def _amplitude_probs(comps, alphabet):
    a = np.abs(comps).ravel()
    counts = np.array([np.count_nonzero(a == x) for x in alphabet], dtype=float)
    return counts / counts.sum()


def generate_frame(kind: str, blocklength, link: LinkSystemConfig, bits_per_pam: int, rate: float,
                   sel: SelectionConfig, n_symbols: int, rng, bank=None, log=None) -> TransmitFrame:
    """Draw information and sign bits, shape, select and map every channel."""
    n_pol = link.n_pol
    channels = list(link.channel_indices)
    alphabet = ShapedConstellation(bits_per_pam).amplitude_alphabet
    comps = {}
    evaluations = 0
    if kind == "ideal":
        if sel.v:
            raise ValueError("sequence selection needs a block shaper")
        p = ideal_distribution(rate, alphabet)
        N = frame_length(n_symbols, 1, link)
        for c in channels:
            comps[c] = rng.choice(alphabet, size=(2 * n_pol, N), p=p)
        info_rate = entropy(p)
    else:
        shaper = make_shaper(kind, int(blocklength), bits_per_pam, rate, sel.v)
        slot = shaper.blocklength // sel.d
        N = frame_length(n_symbols, slot, link)
        n_blocks = N // slot * blocks_per_group(sel.d, n_pol)
        info = {c: rng.integers(0, 2, (n_blocks, shaper.k - sel.v), dtype=np.uint8) for c in channels}
        res = greedy_wdm_select(info, shaper, sel, bank, n_pol=n_pol, log=log)
        for c in channels:
            comps[c] = map_amplitudes(res[c].blocks, sel.d, n_pol)
            evaluations += res[c].evaluations
        info_rate = info_bits_per_block(rate, shaper.blocklength) / shaper.blocklength
    probs, losses, symbols = [], [], []
    for c in channels:
        a = comps[c].astype(float)
        signs = rng.integers(0, 2, a.shape).astype(bool)
        a = np.where(signs, -a, a)
        symbols.append(a[0::2] + 1j * a[1::2])
        pr = _amplitude_probs(comps[c], alphabet)
        probs.append(pr)
        losses.append(0.0 if kind == "ideal" else max(entropy(pr) - info_rate, 0.0))
    frame = DualPolFrame(np.stack(symbols), link.baud_rate_gbd * 1e9)
    return TransmitFrame(frame, np.array(probs), np.array(losses), info_rate, evaluations)
