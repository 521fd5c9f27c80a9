"""Symmetric split-step Fourier propagation with lumped amplification."""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft

from .config import PLANCK, LinkSystemConfig
from .waveform import Waveform


class StepSizeError(RuntimeError):
    """Raised when a step's nonlinear phase rotation runs away."""


# a step may overshoot the phase bound (the peak is measured before the
# step) but not by more than this factor
DIVERGENCE_FACTOR = 10.0


def ase_psd(link: LinkSystemConfig) -> float:
    """One-sided ASE power spectral density per polarization and amplifier, W/Hz."""
    if link.noise_figure_db is None:
        return 0.0
    G = link.span_gain
    if G <= 1:
        return 0.0
    nf = 10 ** (link.noise_figure_db / 10)
    n_sp = nf * G / (2 * (G - 1))
    return n_sp * PLANCK * link.carrier_frequency * (G - 1)


def _effective_length(dz: float, alpha: float) -> float:
    """Length that, times the midpoint power, integrates the decaying power exactly."""
    x = alpha * dz / 2
    return dz if x == 0 else dz * math.sinh(x) / x


def _log_steps(link: LinkSystemConfig) -> np.ndarray:
    """Step lengths growing with the decaying power so each holds equal nonlinear phase."""
    L, a, n = link.span_length_m, link.alpha_per_m, link.steps_per_span
    if a == 0:
        return np.full(n, L / n)
    leff = (1 - math.exp(-a * L)) / a
    edges = -np.log(1 - np.arange(n + 1) / n * a * leff) / a
    return np.diff(edges)


def _ladder(dz: float, cap: float) -> float:
    """Largest ``cap * 2^(-k/8)`` not above ``dz``; keeps the set of step lengths small."""
    if dz >= cap:
        return cap
    if not dz > 0:
        return dz
    k = math.ceil(-8 * math.log2(dz / cap) - 1e-12)
    return cap * 2 ** (-k / 8)


def propagate_span(A: np.ndarray, link: LinkSystemConfig, sample_rate: float) -> tuple[np.ndarray, int]:
    """One span of fiber, no amplifier.  Returns the field and the step count.

    Phase-limited steps are rounded down onto a geometric ladder of lengths
    so the dispersion operators of repeated lengths can be reused.
    """
    n = A.shape[-1]
    w = 2 * np.pi * np.fft.fftfreq(n, d=1.0 / sample_rate)
    lin = -link.alpha_per_m / 2 + 0.5j * link.beta2 * w**2
    g = link.gamma_per_w_m * link.nl_factor
    L = link.span_length_m
    bound = link.max_nl_phase
    cap = link.max_step_km * 1e3
    ops = {}

    def linear(h):
        op = ops.get(h)
        if op is None:
            if len(ops) > 64:
                ops.clear()
            op = ops[h] = np.exp(lin * h)
        return op

    if link.step_mode == "logarithmic":
        plan = iter(_log_steps(link))

        def next_step(power, z):
            return next(plan, L - z)
    else:
        def next_step(power, z):
            peak = float(power.max())
            dz = cap if g * peak == 0 else _ladder(bound / (g * peak), cap)
            return min(dz, L - z)

    z = 0.0
    steps = 0
    power = np.sum(np.abs(A) ** 2, axis=0)
    dz = next_step(power, z)
    Af = sfft.fft(A, axis=-1) * linear(dz / 2)
    while True:
        A = sfft.ifft(Af, axis=-1, overwrite_x=True)
        power = A.real**2 + A.imag**2 if A.shape[0] == 1 else np.sum(A.real**2 + A.imag**2, axis=0)
        if g:
            phase = (g * _effective_length(dz, link.alpha_per_m)) * power.reshape(-1)
            if link.step_mode == "nonlinear_phase" and (not np.isfinite(phase).all()
                                                        or phase.max() > DIVERGENCE_FACTOR * bound):
                raise StepSizeError(f"nonlinear phase {phase.max():.3g} rad in one step exceeds bound {bound:g}")
            A *= np.cos(phase) + 1j * np.sin(phase)
        z += dz
        steps += 1
        if z >= L * (1 - 1e-12):
            Af = sfft.fft(A, axis=-1, overwrite_x=True) * linear(dz / 2)
            break
        # the nonlinear step leaves |A|^2 unchanged
        dz_next = next_step(power, z)
        Af = sfft.fft(A, axis=-1, overwrite_x=True) * linear((dz + dz_next) / 2)
        dz = dz_next
    return sfft.ifft(Af, axis=-1, overwrite_x=True), steps


def amplify(A: np.ndarray, link: LinkSystemConfig, sample_rate: float, rng) -> np.ndarray:
    """EDFA: gain exactly compensating the span loss plus circular Gaussian ASE."""
    A = A * math.sqrt(link.span_gain)
    psd = ase_psd(link)
    if psd:
        var = psd * sample_rate
        A = A + math.sqrt(var / 2) * (rng.standard_normal(A.shape) + 1j * rng.standard_normal(A.shape))
    return A


def propagate(wf: Waveform, link: LinkSystemConfig, seed=None, return_steps=False):
    """Propagate through ``link.n_spans`` amplified spans; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    A = wf.samples.copy()
    total = 0
    for _ in range(link.n_spans):
        A, steps = propagate_span(A, link, wf.sample_rate)
        total += steps
        A = amplify(A, link, wf.sample_rate, rng)
    out = Waveform(A, wf.sample_rate, wf.channels, wf.offsets_hz, seed, wf.tx_frame)
    return (out, total) if return_steps else out
