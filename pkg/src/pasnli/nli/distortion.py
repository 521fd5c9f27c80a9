"""Distortion predicted by the linear filter model on symbol-energy sequences.

``D_p^(c)(n) = sum_{p', c'} sum_m E_{p'}^(c')(n + m) h_{p,p'}^(c,c')(m)``.

Energies are arrays of shape ``(n_channels, n_pol, N)`` whose rows follow
``bank.channels`` and ``bank.pols``.  Sequences are treated as periodic by
default; ``boundary="mean"`` pads both ends with the mean energy instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..mapping import DualPolFrame, frame_energy_sequences
from .filters import NliFilterBank

# direct evaluation below this many multiply-adds, FFT above
DIRECT_LIMIT = 2**20


@dataclass(frozen=True)
class DistortionField:
    """Total distortion with its mean and per-(c', p') variation terms."""

    total: np.ndarray
    mean: float
    variations: dict  # (c', p') -> Delta D(n)

    @property
    def variation_sum(self) -> np.ndarray:
        return sum(self.variations.values())


def correlate(e, h, boundary: str = "periodic", pad_value: float = 0.0, method: str = "auto") -> np.ndarray:
    """``out(n) = sum_m e(n + m) h(m)`` for ``m = -M..M`` (``len(h) = 2M + 1``)."""
    e = np.asarray(e, dtype=float)
    h = np.asarray(h, dtype=float)
    M = len(h) // 2
    N = len(e)
    if method == "auto":
        method = "direct" if N * len(h) <= DIRECT_LIMIT else "fft"
    if boundary == "periodic":
        if method == "direct":
            out = np.zeros(N)
            for j, hm in enumerate(h):
                if hm:
                    out += hm * np.roll(e, -(j - M))
            return out
        g = np.zeros(N)
        np.add.at(g, (-(np.arange(len(h)) - M)) % N, h)
        return np.fft.irfft(np.fft.rfft(e) * np.fft.rfft(g), n=N)
    if boundary == "mean":
        padded = np.concatenate([np.full(M, pad_value), e, np.full(M, pad_value)])
        if method == "direct":
            return np.correlate(padded, h, "valid")
        return fftconvolve(padded, h[::-1], "valid")
    raise ValueError(f"unknown boundary {boundary!r}")


def _mean_energies(energies, mean_energy):
    if mean_energy is None:
        return energies.mean(axis=-1)
    return np.broadcast_to(np.asarray(mean_energy, dtype=float), energies.shape[:2])


def predict_distortion(energies, bank: NliFilterBank, c=0, p="x", channels=None, pols=None,
                       mean_energy=None, boundary="periodic", method="auto") -> DistortionField:
    """Distortion of ``s_p^(c)`` from channels ``channels`` and polarizations ``pols``.

    ``mean_energy`` (shape ``(n_channels, n_pol)``) is the ensemble mean
    ``E_bar``; the per-sequence empirical mean is used when omitted.
    """
    energies = np.asarray(energies, dtype=float)
    if energies.ndim == 2:
        energies = energies[None]
    channels = bank.channels if channels is None else tuple(channels)
    pols = bank.pols if pols is None else tuple(pols)
    ebar = _mean_energies(energies, mean_energy)
    variations = {}
    mean = 0.0
    for cp in channels:
        ci = bank.channels.index(cp)
        for pp in pols:
            pi = bank.pols.index(pp)
            h = bank.tap(c, cp, p, pp)
            variations[(cp, pp)] = correlate(energies[ci, pi] - ebar[ci, pi], h, boundary, 0.0, method)
            mean += ebar[ci, pi] * h.sum()
    total = sum(variations.values()) + mean
    return DistortionField(total, float(mean), variations)


def predict_received(frame: DualPolFrame, bank: NliFilterBank, form="multiplicative", boundary="periodic",
                     gamma=None) -> DualPolFrame:
    """Received symbols ``s (1 + j gamma D)`` or, with ``form="phase"``, ``s exp(j gamma D)``."""
    gamma = bank.gamma if gamma is None else gamma
    energies = frame_energy_sequences(frame)
    out = np.empty_like(frame.symbols)
    for ci, c in enumerate(bank.channels):
        for pi, p in enumerate(bank.pols):
            d = predict_distortion(energies, bank, c, p, boundary=boundary).total
            s = frame.symbols[ci, pi]
            if form == "multiplicative":
                out[ci, pi] = s * (1 + 1j * gamma * d)
            elif form == "phase":
                out[ci, pi] = s * np.exp(1j * gamma * d)
            else:
                raise ValueError(f"unknown form {form!r}")
    return DualPolFrame(out, frame.baud_rate)


def simplified_distortion(energies, bank: NliFilterBank, c=0, p="x", channels=None, boundary="periodic") -> np.ndarray:
    """``sum_c' ((2 E_p + E_p') * h_p)`` with ``h_p`` half the intra-polarization filter."""
    energies = np.asarray(energies, dtype=float)
    if energies.ndim == 2:
        energies = energies[None]
    channels = bank.channels if channels is None else tuple(channels)
    pi = bank.pols.index(p)
    out = 0.0
    for cp in channels:
        ci = bank.channels.index(cp)
        agg = 2 * energies[ci, pi]
        if len(bank.pols) == 2:
            agg = agg + energies[ci, 1 - pi]
        out = out + correlate(agg, bank.tap(c, cp, p, p) / 2, boundary)
    return out
