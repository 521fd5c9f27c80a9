"""Running digital sums, energy spectra and filter bandwidths."""

from __future__ import annotations

import csv
import math

import numpy as np
from scipy.signal import welch


def _centred(energies, mean_energy):
    e = np.asarray(energies, dtype=float)
    if e.ndim == 2:
        e = e[None]
    ebar = e.mean(axis=-1, keepdims=True) if mean_energy is None else np.asarray(mean_energy, float)[..., None]
    return e - ebar


def rds(energies, t=None, p: int = 0, mean_energy=None):
    """Running digital sums ``(lambda_tilde(t), lambda(t))``.

    ``energies`` is ``(n_channels, n_pol, N)`` (all channels are summed);
    ``lambda_tilde`` sums the deviations of every polarization, ``lambda``
    adds polarization ``p`` once more.  With ``t=None`` both are returned
    for ``t = 1..N``.
    """
    dev = _centred(energies, mean_energy)
    tilde = np.cumsum(dev.sum(axis=(0, 1)))
    full = tilde + np.cumsum(dev[:, p].sum(axis=0))
    if t is None:
        return tilde, full
    t = np.asarray(t)
    if np.any(t < 1):
        raise ValueError("t must be >= 1")
    return tilde[t - 1], full[t - 1]


def aggregate_energy(energies, p: int = 0, mean_energy=None) -> np.ndarray:
    """``2 (E_p - E_bar_p) + (E_p' - E_bar_p')`` for one channel ``(n_pol, N)``."""
    dev = _centred(energies, mean_energy)[0]
    out = 2 * dev[p]
    if dev.shape[0] == 2:
        out = out + dev[1 - p]
    return out


def energy_spectrum(seq, nperseg: int = 4096, window="hann", fs: float = 1.0):
    """Welch-averaged power spectrum of ``seq`` in dB.

    Returns two-sided frequencies in cycles per symbol (times ``fs``),
    sorted ascending, and ``10 log10`` of the averaged periodogram.  No
    detrending is applied, so a mean offset shows up at ``f = 0``.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.size == 0:
        raise ValueError("empty sequence")
    nperseg = min(nperseg, seq.size)
    f, pxx = welch(seq, fs=fs, window=window, nperseg=nperseg, detrend=False,
                   return_onesided=False, scaling="density")
    order = np.argsort(f)
    with np.errstate(divide="ignore"):
        return f[order], 10 * np.log10(pxx[order])


def band_mean_db(f, spec_db, fraction: float, fs: float = 1.0) -> float:
    """Mean dB level over ``|f| <= fraction * fs / 2``, excluding nothing."""
    sel = np.abs(f) <= fraction * fs / 2
    return float(np.mean(spec_db[sel]))


def frequency_response(h, baud_rate: float, n_fft: int = 2**16):
    """``|H(f)|`` in dB normalized to 0 dB at ``f = 0`` for ``0 <= f < B/2``."""
    h = np.asarray(h, dtype=float)
    n_fft = max(n_fft, 2 ** math.ceil(math.log2(len(h))))
    H = np.abs(np.fft.rfft(h, n_fft))
    f = np.arange(len(H)) * baud_rate / n_fft
    return f, 20 * np.log10(H / H[0])


def _power_response(h, offsets, f, T):
    return np.abs(np.exp(-2j * np.pi * np.outer(np.atleast_1d(f), offsets) * T) @ h) ** 2


def filter_bandwidth_3db(h, baud_rate: float, offsets=None, n_fft: int = 2**20) -> float:
    """Smallest ``f`` where ``|H(f)|^2`` falls 3 dB below ``|H(0)|^2``.

    Returns ``inf`` when the response never drops by 3 dB on ``[0, B/2]``.
    """
    h = np.asarray(h, dtype=float)
    offsets = np.arange(len(h)) - len(h) // 2 if offsets is None else np.asarray(offsets)
    T = 1.0 / baud_rate
    target = _power_response(h, offsets, 0.0, T)[0] / 2
    H2 = np.abs(np.fft.rfft(h, max(n_fft, 4 * len(h)))) ** 2
    below = np.nonzero(H2 < target)[0]
    if below.size == 0:
        return math.inf
    df = baud_rate / max(n_fft, 4 * len(h))
    lo, hi = (below[0] - 1) * df, below[0] * df
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _power_response(h, offsets, mid, T)[0] < target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log10(x), np.log10(y), 1)[0])


def write_spectrum_csv(path, f_hz, magnitude_db) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f_Hz", "magnitude_dB"])
        for f, m in zip(f_hz, magnitude_db):
            w.writerow([repr(float(f)), repr(float(m))])
