"""Per-(channel, polarization) NLI filter taps built from the axis coefficients."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..fiber.config import LinkSystemConfig
from .kernel import MAX_TAPS, PerturbationKernel, QuadratureRule, compute_kernel

POLS = ("x", "y")


@dataclass(frozen=True)
class NliFilterBank:
    """Taps ``h[(c, c', p, p')]`` on the common support ``m = -M..M``.

    ``taps[key][M + m]`` is the coefficient of ``E_{p'}^{(c')}(n + m)`` in
    the distortion of ``s_p^{(c)}(n)``.
    """

    taps: dict
    half_width: int
    gamma: float
    threshold: float
    channels: tuple
    pols: tuple
    link_hash: str = ""
    simplified: bool = False

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def tap(self, c, c_prime, p, p_prime) -> np.ndarray:
        try:
            return self.taps[(c, c_prime, p, p_prime)]
        except KeyError:
            raise KeyError(f"no taps for channel pair ({c}, {c_prime}), pols ({p}, {p_prime})") from None

    def keys(self):
        return self.taps.keys()

    def to_json(self) -> dict:
        return {
            "version": 1,
            "link_hash": self.link_hash,
            "gamma": self.gamma,
            "threshold": self.threshold,
            "half_width": self.half_width,
            "channels": list(self.channels),
            "pols": list(self.pols),
            "simplified": self.simplified,
            "taps": [
                {"c": c, "c_prime": cp, "p": p, "p_prime": pp, "values": [repr(float(v)) for v in h]}
                for (c, cp, p, pp), h in sorted(self.taps.items())
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "NliFilterBank":
        if obj.get("version") != 1:
            raise ValueError("unsupported tap cache version")
        taps = {
            (t["c"], t["c_prime"], t["p"], t["p_prime"]): np.array([float(v) for v in t["values"]])
            for t in obj["taps"]
        }
        return cls(
            taps, obj["half_width"], obj["gamma"], obj["threshold"], tuple(obj["channels"]),
            tuple(obj["pols"]), obj["link_hash"], obj["simplified"],
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "NliFilterBank":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def support_half_width(h: np.ndarray, threshold: float) -> int:
    """Smallest ``M`` keeping every tap >= threshold * peak and dropping < threshold of the mass."""
    centre = len(h) // 2
    a = np.abs(h)
    big = np.nonzero(a >= threshold * a.max())[0]
    m_peak = int(np.max(np.abs(big - centre)))
    # mass outside |m| > M for every M
    dist = np.abs(np.arange(len(h)) - centre)
    outside = np.bincount(dist, weights=a)[::-1].cumsum()[::-1]
    outside = np.append(outside[1:], 0.0)
    m_mass = int(np.argmax(outside < threshold * a.sum()))
    return max(m_peak, m_mass)


def assemble_taps(spm: np.ndarray, xpm: dict, channels, pols, simplified=False) -> dict:
    """Channel/polarization taps from axis coefficients.

    ``spm`` and ``xpm[dc]`` are ``h(m, 0)`` arrays centred on ``m = 0``.
    Intra-polarization SPM doubles every tap except ``m = 0``; XPM doubles
    the intra-polarization taps.  ``simplified`` sets every
    inter-polarization filter to half of the intra-polarization one.
    """
    centre = len(spm) // 2
    spm_intra = 2 * spm
    spm_intra[centre] = spm[centre]
    taps = {}
    for c in channels:
        for cp in channels:
            if c == cp:
                intra, inter = spm_intra, spm
            else:
                intra, inter = 2 * xpm[cp - c], xpm[cp - c]
            if simplified:
                inter = intra / 2
            for p in pols:
                for pp in pols:
                    taps[(c, cp, p, pp)] = (intra if p == pp else inter).copy()
    return taps


def build_filter_bank(link: LinkSystemConfig, channels=None, threshold: float = 1e-4,
                      max_taps: int = MAX_TAPS, simplified: bool = False, kernels=None,
                      quadrature=QuadratureRule(), t0=None) -> NliFilterBank:
    """Filter bank for ``channels`` (defaults to the link's full grid).

    ``kernels`` may supply precomputed :class:`PerturbationKernel` objects
    keyed by channel offset ``c' - c`` (0 for SPM).
    """
    channels = tuple(link.channel_indices if channels is None else channels)
    pols = POLS[: link.n_pol]
    kernels = dict(kernels or {})
    offsets = sorted({cp - c for c in channels for cp in channels})
    for dc in offsets:
        if dc not in kernels:
            kernels[dc] = compute_kernel(link, 0, dc, max_taps, t0=t0, quadrature=quadrature)
    full = {dc: kernels[dc].values for dc in offsets}
    width = max(support_half_width(h, threshold) for h in full.values())
    width = min(width, max_taps)
    centre = len(full[0]) // 2
    cut = {dc: h[centre - width:centre + width + 1] for dc, h in full.items()}
    taps = assemble_taps(cut[0], {dc: cut[dc] for dc in offsets if dc}, channels, pols, simplified)
    return NliFilterBank(
        taps, width, link.gamma_per_w_km, threshold, channels, pols, link.link_hash(), simplified
    )


def single_tap_bank(channels=(0,), pols=("x",), value=1.0, gamma=1.0) -> NliFilterBank:
    """Bank whose every filter is ``value`` times a unit impulse; for tests and examples."""
    taps = {(c, cp, p, pp): np.array([value]) for c in channels for cp in channels for p in pols for pp in pols}
    return NliFilterBank(taps, 0, gamma, 0.0, tuple(channels), tuple(pols))


def bank_from_filter(h, channels=(0,), pols=("x",), gamma=1.0) -> NliFilterBank:
    """Bank using the same odd-length filter ``h`` for every pair."""
    h = np.asarray(h, dtype=float)
    if len(h) % 2 == 0:
        raise ValueError("filter length must be odd")
    taps = {(c, cp, p, pp): h.copy() for c in channels for cp in channels for p in pols for pp in pols}
    return NliFilterBank(taps, len(h) // 2, gamma, 0.0, tuple(channels), tuple(pols))
