"""Mapping of shaped amplitude blocks onto the real components of QAM frames.

A dual-polarization frame has four real components per time slot, ordered
``(I_x, Q_x, I_y, Q_y)``; a single-polarization frame has ``(I_x, Q_x)``.
With mapping dimension ``d`` each block owns ``d`` consecutive components:
block ``j`` of a group feeds components ``j*d ... j*d + d - 1``, and its
amplitude ``n`` goes to component ``j*d + (n mod d)`` at time ``n // d``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

COMPONENT_NAMES = ("Ix", "Qx", "Iy", "Qy")


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class DualPolFrame:
    """Complex symbols of shape ``(n_channels, n_pol, n_symbols)``."""

    symbols: np.ndarray
    baud_rate: float | None = None

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=complex)
        if s.ndim == 2:
            s = s[None]
        if s.ndim != 3 or s.shape[1] not in (1, 2):
            raise MappingError(f"bad frame shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise MappingError("frame contains non-finite values")
        object.__setattr__(self, "symbols", s)

    @property
    def n_channels(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_pol(self) -> int:
        return self.symbols.shape[1]

    def __len__(self) -> int:
        return self.symbols.shape[2]

    def components(self, channel: int = 0) -> np.ndarray:
        """Real components ``(2*n_pol, N)`` of one subchannel."""
        s = self.symbols[channel]
        return np.stack([f(s[p]) for p in range(self.n_pol) for f in (np.real, np.imag)])

    @classmethod
    def from_components(cls, comps, baud_rate=None) -> "DualPolFrame":
        """Build from real components ``(C, 2*P, N)`` or ``(2*P, N)``."""
        comps = np.asarray(comps, dtype=float)
        if comps.ndim == 2:
            comps = comps[None]
        return cls(comps[:, 0::2] + 1j * comps[:, 1::2], baud_rate)

    def stack(self, others) -> "DualPolFrame":
        return DualPolFrame(np.concatenate([self.symbols] + [o.symbols for o in others]), self.baud_rate)


def blocks_per_group(d: int, n_pol: int = 2) -> int:
    if d not in (1, 2, 4):
        raise MappingError("mapping dimension must be 1, 2 or 4")
    if d > 2 * n_pol:
        raise MappingError(f"{d}D mapping needs {d} components, frame has {2 * n_pol}")
    return 2 * n_pol // d


def map_amplitudes(blocks, d: int, n_pol: int = 2) -> np.ndarray:
    """Unsigned component amplitudes ``(2*n_pol, N)`` for consecutive block groups.

    ``blocks`` is ``(n_blocks, l)`` with ``n_blocks`` a multiple of the
    blocks per group; successive groups follow each other in time.
    """
    blocks = np.asarray(blocks)
    if blocks.ndim == 1:
        blocks = blocks[None]
    g = blocks_per_group(d, n_pol)
    n_blocks, ell = blocks.shape
    if ell % d:
        raise MappingError(f"mapping dimension {d} does not divide blocklength {ell}")
    if n_blocks % g:
        raise MappingError(f"{d}D mapping needs a multiple of {g} blocks, got {n_blocks}")
    n_groups = n_blocks // g
    # (group, block-in-group, time, component-in-block)
    a = blocks.reshape(n_groups, g, ell // d, d)
    return a.transpose(1, 3, 0, 2).reshape(2 * n_pol, n_groups * (ell // d))


def unmap_amplitudes(comps, d: int, ell: int) -> np.ndarray:
    comps = np.asarray(comps)
    n_comp, n = comps.shape
    g = blocks_per_group(d, n_comp // 2)
    if ell % d or n % (ell // d):
        raise MappingError("frame length is not a whole number of blocks")
    n_groups = n // (ell // d)
    a = comps.reshape(g, d, n_groups, ell // d).transpose(2, 0, 3, 1)
    return a.reshape(n_groups * g, ell)


def map_blocks(blocks, d: int, signs, scale: float = 1.0, n_pol: int = 2, baud_rate=None) -> DualPolFrame:
    """Single-subchannel frame from amplitude blocks and sign bits.

    Signs are consumed time-major, component-major: slot ``n`` takes bits
    ``signs[2*n_pol*n : 2*n_pol*(n+1)]`` for its components in order.
    """
    amps = map_amplitudes(blocks, d, n_pol)
    signs = np.asarray(signs).ravel()
    if signs.size != amps.size:
        raise MappingError(f"need {amps.size} sign bits, got {signs.size}")
    sgn = signs.reshape(amps.shape[1], amps.shape[0]).T
    comps = np.where(sgn.astype(bool), -amps, amps) * scale
    return DualPolFrame.from_components(comps, baud_rate)


def unmap_blocks(frame: DualPolFrame, d: int, ell: int, scale: float = 1.0, channel: int = 0):
    """Inverse of :func:`map_blocks`: ``(blocks, signs)``."""
    comps = frame.components(channel) / scale
    amps = np.rint(np.abs(comps)).astype(np.int64)
    signs = (comps < 0).astype(np.uint8).T.ravel()
    return unmap_amplitudes(amps, d, ell), signs


def frame_energy_sequences(frame: DualPolFrame) -> np.ndarray:
    """Symbol energies ``|s_p(n)|^2`` with shape ``(n_channels, n_pol, N)``."""
    s = frame.symbols
    return s.real**2 + s.imag**2


def write_frame_csv(frame: DualPolFrame, path) -> None:
    """Columns: time, then ``c{k}_Ix, c{k}_Qx[, c{k}_Iy, c{k}_Qy]`` per subchannel."""
    names = COMPONENT_NAMES[: 2 * frame.n_pol]
    header = ["time"] + [f"c{c}_{n}" for c in range(frame.n_channels) for n in names]
    cols = np.concatenate([frame.components(c) for c in range(frame.n_channels)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t in range(len(frame)):
            w.writerow([t] + [repr(float(v)) for v in cols[:, t]])
