"""Root-raised-cosine pulse in the frequency domain."""

from __future__ import annotations

import numpy as np


def rrc_response(f, baud_rate: float, rolloff: float) -> np.ndarray:
    """Square root of the raised-cosine spectrum, 1 in the passband."""
    a = np.abs(np.asarray(f, dtype=float)) / baud_rate
    lo, hi = (1 - rolloff) / 2, (1 + rolloff) / 2
    out = np.where(a <= lo, 1.0, 0.0)
    if rolloff > 0:
        mid = (a > lo) & (a <= hi)
        out = np.where(mid, np.sqrt(0.5 * (1 + np.cos(np.pi / rolloff * (a - lo)))), out)
    else:
        # brick-wall edge takes the half-power value so aliases sum to one
        out = np.where(a == lo, np.sqrt(0.5), out)
    return out


def rrc_pulse(n_symbols: int, sps: int, rolloff: float) -> np.ndarray:
    """Periodic RRC pulse sampled at ``sps`` samples per symbol, centred at 0.

    Normalized to unit energy in units of the symbol period:
    ``sum |p|^2 / sps = 1``.
    """
    n = n_symbols * sps
    f = np.fft.fftfreq(n, d=1.0 / sps)  # in units of the baud rate
    return np.fft.ifft(sps * rrc_response(f, 1.0, rolloff))
