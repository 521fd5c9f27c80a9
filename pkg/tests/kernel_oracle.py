"""Slow numerical reference for the perturbation coefficients.

The dispersed pulse is computed by FFT on a time grid and the four-pulse
overlap integral by the trapezoid rule; the distance integral uses adaptive
quadrature per span.
"""

import math

import numpy as np
from scipy.integrate import quad_vec

from pasnli.nli.kernel import NYQUIST_T0_FACTOR


def oracle_coefficients(link, mk_pairs, freq_offset=0.0, n_time=2**14):
    T = link.symbol_period
    t0 = NYQUIST_T0_FACTOR * T
    b2 = link.beta2
    L = link.span_length_m * link.n_spans
    width = 8 * math.sqrt(t0**2 + (b2 * L / t0) ** 2) + abs(b2 * 2 * math.pi * freq_offset * L)
    width += 2 * T * max(abs(m) + abs(k) for m, k in mk_pairs)
    dt = min(t0 / 5, 2 * width / n_time)
    n = n_time
    while n * dt < 2 * width:
        n *= 2
    t = (np.arange(n) - n // 2) * dt
    w = 2 * np.pi * np.fft.fftfreq(n, dt)
    amp = math.sqrt(T / (t0 * math.sqrt(math.pi)))

    def pulse(z, shift, carrier):
        # pulse centred at `shift` on carrier `carrier` (rad/s), dispersed over z
        g0 = amp * np.exp(-((t - shift) ** 2) / (2 * t0**2)) * np.exp(1j * carrier * t)
        return np.fft.ifft(np.fft.fft(g0) * np.exp(1j * b2 * w**2 * z / 2))

    om = 2 * np.pi * freq_offset

    def integrand(zp, span):
        z = span * link.span_length_m + zp
        out = []
        for m, k in mk_pairs:
            g_obs = pulse(z, 0.0, 0.0)
            ga = pulse(z, m * T, om)
            gb = pulse(z, (m + k) * T, om)
            gc = pulse(z, k * T, 0.0)
            val = np.sum(np.conj(g_obs) * ga * np.conj(gb) * gc) * dt
            out.append(val)
        return np.exp(-link.alpha_per_m * zp) * np.array(out)

    total = np.zeros(len(mk_pairs), dtype=complex)
    for span in range(link.n_spans):
        res, _ = quad_vec(lambda zp: integrand(zp, span), 0.0, link.span_length_m, epsrel=1e-7)
        total += res
    # normalize by the pulse energy T and convert metres to km
    return total * link.nl_factor / T / 1e3
