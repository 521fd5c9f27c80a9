"""First-order perturbation coefficients for Gaussian-approximated pulses.

The coefficient multiplying ``s(m+n) s*(k+m+n) s(k+n)`` in the distortion of
symbol ``n`` is

    h(m, k) = kappa T / (pi T0^2) * sum_spans int dz' e^{-alpha z'}
              T0^4 / |tau|^2 * sqrt(pi / P) * exp(Q^2 / (4P) - R)

with the dispersed Gaussian width ``tau(z) = T0^2 - j beta2 z`` (``z`` the
accumulated distance, dispersion is not compensated inline), and

    P = 2 T0^2 / |tau|^2
    Q = b / tau* + (a + c) / tau
    R = b^2 / (2 tau*) + (a^2 + c^2) / (2 tau)

for pulse delays ``a = mT + delta``, ``b = (m+k)T + delta``, ``c = kT``.
``delta(z) = -beta2 * 2 pi * df * z`` is the walk-off of an interfering
channel at frequency offset ``df``.  Pulses are scaled to energy ``T`` so
``|s|^2`` is power in watts and ``h`` is in km.  On the axes ``k = 0`` and
``m = 0`` the coefficient is real:

    h(m, 0) = kappa T / sqrt(2 pi) * sum int dz' e^{-alpha z'} exp(-(mT+delta)^2 / (2 Tz^2)) / Tz

with ``Tz^2 = T0^2 + (beta2 z / T0)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..fiber.config import ConfigError, LinkSystemConfig

# T0 matching the RMS bandwidth of a Nyquist (sinc) pulse of period T
NYQUIST_T0_FACTOR = math.sqrt(6.0) / (2.0 * math.pi)
MAX_TAPS = 4096


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule over one span."""

    subintervals: int = 16
    nodes: int = 16

    def points(self, span_length: float):
        x, w = leggauss(self.nodes)
        edges = np.linspace(0.0, span_length, self.subintervals + 1)
        half = np.diff(edges) / 2
        mid = (edges[:-1] + edges[1:]) / 2
        z = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wz = (half[:, None] * w[None, :]).ravel()
        return z, wz


@dataclass(frozen=True)
class PerturbationKernel:
    """Axis coefficients ``h(m, 0)`` for one channel pair.

    ``values[i]`` is the coefficient at delay ``m[i]`` in km; ``general``
    evaluates the full complex ``h(m, k)``.
    """

    m: np.ndarray
    values: np.ndarray
    link: LinkSystemConfig
    c: int
    c_prime: int
    t0: float
    kappa: float
    quadrature: QuadratureRule

    @property
    def is_spm(self) -> bool:
        return self.c == self.c_prime

    @property
    def freq_offset(self) -> float:
        return (self.c_prime - self.c) * self.link.wdm_spacing_ghz * 1e9

    def at(self, m) -> np.ndarray:
        idx = np.asarray(m) + (len(self.m) // 2)
        return self.values[idx]

    def general(self, m, k) -> np.ndarray:
        return perturbation_coefficient(
            self.link, m, k, self.freq_offset, self.t0, self.kappa, self.quadrature
        )


def _span_nodes(link: LinkSystemConfig, quadrature: QuadratureRule):
    zs, ws = quadrature.points(link.span_length_m)
    atten = np.exp(-link.alpha_per_m * zs) * ws
    for s in range(link.n_spans):
        yield s * link.span_length_m + zs, atten


def axis_coefficients(link: LinkSystemConfig, m, freq_offset=0.0, t0=None, kappa=None,
                      quadrature=QuadratureRule(), chunk=2048) -> np.ndarray:
    """Real ``h(m, 0)`` in km for integer delays ``m``."""
    T = link.symbol_period
    t0 = NYQUIST_T0_FACTOR * T if t0 is None else t0
    kappa = link.nl_factor if kappa is None else kappa
    b2 = link.beta2
    m = np.asarray(m, dtype=float)
    out = np.zeros(m.shape)
    flat = out.reshape(-1)
    mf = m.reshape(-1)
    for z, wz in _span_nodes(link, quadrature):
        tz = np.sqrt(t0**2 + (b2 * z / t0) ** 2)
        delta = -b2 * 2 * math.pi * freq_offset * z
        for lo in range(0, mf.size, chunk):
            mm = mf[lo:lo + chunk, None]
            arg = (mm * T + delta[None, :]) ** 2 / (2 * tz[None, :] ** 2)
            flat[lo:lo + chunk] += np.exp(-arg) @ (wz / tz)
    # metres of integration to km
    return out * kappa * T / math.sqrt(2 * math.pi) / 1e3


def perturbation_coefficient(link: LinkSystemConfig, m, k, freq_offset=0.0, t0=None, kappa=None,
                             quadrature=QuadratureRule()) -> np.ndarray:
    """Complex ``h(m, k)`` in km by the closed-form time integral."""
    T = link.symbol_period
    t0 = NYQUIST_T0_FACTOR * T if t0 is None else t0
    kappa = link.nl_factor if kappa is None else kappa
    b2 = link.beta2
    m, k = np.broadcast_arrays(np.asarray(m, float), np.asarray(k, float))
    shape = m.shape
    m, k = m.reshape(-1, 1), k.reshape(-1, 1)
    total = np.zeros(m.shape[0], dtype=complex)
    for z, wz in _span_nodes(link, quadrature):
        tau = t0**2 - 1j * b2 * z
        delta = -b2 * 2 * math.pi * freq_offset * z
        a = m * T + delta
        b = (m + k) * T + delta
        c = k * T
        P = 2 * t0**2 / np.abs(tau) ** 2
        Q = b / np.conj(tau) + (a + c) / tau
        R = b**2 / (2 * np.conj(tau)) + (a**2 + c**2) / (2 * tau)
        val = t0**4 / np.abs(tau) ** 2 * np.sqrt(math.pi / P) * np.exp(Q**2 / (4 * P) - R)
        total += val @ wz
    return (total * kappa * T / (math.pi * t0**2) / 1e3).reshape(shape)


def compute_kernel(link: LinkSystemConfig, c: int = 0, c_prime: int = 0, max_taps: int = MAX_TAPS,
                   t0=None, quadrature=QuadratureRule()) -> PerturbationKernel:
    """Axis coefficients ``h(m, 0)`` for ``|m| <= max_taps``.

    ``c == c_prime`` gives the SPM kernel, otherwise XPM from channel
    ``c_prime`` at ``(c_prime - c)`` grid spacings.
    """
    if link.dispersion_ps_nm_km == 0 and max_taps is None:
        raise ConfigError("zero dispersion has unbounded memory; give max_taps")
    T = link.symbol_period
    t0 = NYQUIST_T0_FACTOR * T if t0 is None else t0
    m = np.arange(-max_taps, max_taps + 1)
    df = (c_prime - c) * link.wdm_spacing_ghz * 1e9
    vals = axis_coefficients(link, m, df, t0, link.nl_factor, quadrature)
    return PerturbationKernel(m, vals, link, c, c_prime, t0, link.nl_factor, quadrature)
