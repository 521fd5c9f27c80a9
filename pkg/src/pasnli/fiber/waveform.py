"""Sampled multi-channel waveforms, transmitter and receiver DSP."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..mapping import DualPolFrame
from ..shaping_core import dbm_to_watt
from .config import ConfigError, LinkSystemConfig
from .pulse import rrc_response


@dataclass
class Waveform:
    """Complex baseband samples ``(n_pol, n_samples)`` at ``sample_rate`` Hz.

    ``tx_frame`` keeps the launched (power-scaled) symbols so the receiver
    side can be compared against them.
    """

    samples: np.ndarray
    sample_rate: float
    channels: tuple = (0,)
    offsets_hz: tuple = (0.0,)
    seed: int | None = None
    tx_frame: DualPolFrame | None = field(default=None, repr=False)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    @property
    def n_pol(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def power(self) -> float:
        """Mean power per polarization in W."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def copy(self, samples=None) -> "Waveform":
        return Waveform(self.samples.copy() if samples is None else samples, self.sample_rate,
                        self.channels, self.offsets_hz, self.seed, self.tx_frame)

    def save(self, path) -> None:
        """Raw interleaved little-endian float64 plus a ``.json`` sidecar.

        Each time sample is written as ``Re x, Im x[, Re y, Im y]``.
        """
        path = Path(path)
        inter = np.empty((self.n_samples, self.n_pol, 2), dtype="<f8")
        inter[..., 0] = self.samples.real.T
        inter[..., 1] = self.samples.imag.T
        inter.tofile(path)
        meta = {
            "sample_rate": self.sample_rate,
            "n_pol": self.n_pol,
            "n_samples": self.n_samples,
            "layout": "interleaved re/im per polarization, little-endian float64",
            "channels": list(self.channels),
            "offsets_hz": list(self.offsets_hz),
            "seed": self.seed,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=1))

    @classmethod
    def load(cls, path) -> "Waveform":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        raw = np.fromfile(path, dtype="<f8").reshape(meta["n_samples"], meta["n_pol"], 2)
        samples = (raw[..., 0] + 1j * raw[..., 1]).T
        return cls(samples, meta["sample_rate"], tuple(meta["channels"]), tuple(meta["offsets_hz"]), meta["seed"])


def _bin_shift(offset_hz: float, n_symbols: int, baud_rate: float) -> int:
    shift = offset_hz * n_symbols / baud_rate
    if abs(shift - round(shift)) > 1e-6:
        raise ConfigError(
            f"channel offset {offset_hz / 1e9:g} GHz is not a multiple of the frame's frequency "
            f"resolution; choose a frame length that makes offset * N / baud_rate an integer"
        )
    return int(round(shift))


def scale_to_launch_power(frame: DualPolFrame, power_dbm: float) -> DualPolFrame:
    """Scale every channel so its mean symbol energy per polarization is the launch power."""
    s = frame.symbols
    p = np.mean(np.abs(s) ** 2, axis=(1, 2), keepdims=True)
    return DualPolFrame(s * np.sqrt(dbm_to_watt(power_dbm) / p), frame.baud_rate)


def modulate(frame: DualPolFrame, link: LinkSystemConfig, normalize: bool = True) -> Waveform:
    """RRC-shaped WDM waveform; channel ``i`` of ``frame`` sits at ``link.channel_indices[i]``.

    With ``normalize`` each channel is scaled to ``link.launch_power_dbm``
    per polarization; otherwise symbols are taken to be in sqrt(W).
    """
    if frame.n_channels != link.n_channels:
        raise ConfigError(f"frame has {frame.n_channels} channels, link expects {link.n_channels}")
    if frame.n_pol != link.n_pol:
        raise ConfigError(f"frame has {frame.n_pol} polarizations, link expects {link.n_pol}")
    if normalize:
        frame = scale_to_launch_power(frame, link.launch_power_dbm)
    B = link.baud_rate_gbd * 1e9
    sps = link.samples_per_symbol
    N = len(frame)
    n = N * sps
    f = np.fft.fftfreq(n, d=1.0 / (sps * B))
    spec = np.zeros((frame.n_pol, n), dtype=complex)
    pulse = sps * rrc_response(f, B, link.rolloff)
    for ci, off in enumerate(link.channel_offsets_hz):
        shift = _bin_shift(off, N, B)
        # zero-stuffed upsampling replicates the symbol spectrum sps times
        base = np.tile(np.fft.fft(frame.symbols[ci], axis=-1), (1, sps)) * pulse
        spec += np.roll(base, shift, axis=-1)
    return Waveform(np.fft.ifft(spec, axis=-1), sps * B, tuple(link.channel_indices),
                    tuple(link.channel_offsets_hz), None, frame)


def dispersion_phase(n_samples: int, sample_rate: float, beta2: float, length_m: float) -> np.ndarray:
    """``exp(j beta2 omega^2 z / 2)``: the fiber's all-pass CD response."""
    w = 2 * np.pi * np.fft.fftfreq(n_samples, d=1.0 / sample_rate)
    return np.exp(0.5j * beta2 * w**2 * length_m)


def mean_phase(sent, received) -> float:
    """``arg sum conj(s) r``: the common rotation minimizing the squared error."""
    return float(np.angle(np.sum(np.conj(sent) * received)))


def receive(wf: Waveform, link: LinkSystemConfig, channel: int = 0, sent=None, cd_compensate=True) -> np.ndarray:
    """Symbols ``(n_pol, N)`` of WDM channel index ``channel``.

    Full CD compensation, shift to baseband, matched RRC filter and
    symbol-rate sampling; with ``sent`` (defaults to the waveform's
    transmit frame) the result is rotated by the mean phase.
    """
    B = link.baud_rate_gbd * 1e9
    sps = int(round(wf.sample_rate / B))
    n = wf.n_samples
    N = n // sps
    spec = np.fft.fft(wf.samples, axis=-1)
    if cd_compensate:
        spec = spec * np.conj(dispersion_phase(n, wf.sample_rate, link.beta2, link.span_length_m * link.n_spans))
    ci = list(link.channel_indices).index(channel)
    spec = np.roll(spec, -_bin_shift(link.channel_offsets_hz[ci], N, B), axis=-1)
    f = np.fft.fftfreq(n, d=1.0 / wf.sample_rate)
    spec = spec * rrc_response(f, B, link.rolloff)
    # sampling every sps-th point aliases the spectrum down to N bins
    r = np.fft.ifft(spec.reshape(wf.n_pol, sps, N).sum(axis=1), axis=-1) / sps
    if sent is None and wf.tx_frame is not None:
        sent = wf.tx_frame.symbols[ci]
    if sent is not None:
        r = r * np.exp(-1j * mean_phase(sent, r))
    return r


def ase_snr_db(link: LinkSystemConfig, power_dbm=None) -> float:
    """Closed-form SNR after matched filtering when only ASE is present."""
    from .ssfm import ase_psd

    p = dbm_to_watt(link.launch_power_dbm if power_dbm is None else power_dbm)
    noise = link.n_spans * ase_psd(link) * link.baud_rate_gbd * 1e9
    return 10 * math.log10(p / noise)
