"""Effective SNR, Q-factor from uncoded BER, and AIR from bitwise posteriors."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, logsumexp

from .shaping_core import ShapedConstellation, entropy, gray_code, int_to_bits

MIN_SYMBOLS_SNR = 1000
MIN_SYMBOLS_AIR = 10_000
# floor on bit posteriors before taking logs
POSTERIOR_FLOOR = 1e-300


def snr_eff(sent, received) -> float:
    """``10 log10(sum |S|^2 / sum |S - R|^2)`` in dB; ``inf`` when ``R == S``."""
    s = np.asarray(sent).ravel()
    r = np.asarray(received).ravel()
    if s.shape != r.shape:
        raise ValueError("sent and received lengths differ")
    if s.size < MIN_SYMBOLS_SNR:
        raise ValueError(f"need at least {MIN_SYMBOLS_SNR} symbols, got {s.size}")
    noise = float(np.sum(np.abs(s - r) ** 2))
    if noise == 0:
        return math.inf
    return 10 * math.log10(float(np.sum(np.abs(s) ** 2)) / noise)


def erfc_inverse(y: float) -> float:
    """Inverse of erfc on ``(0, 1]`` by bracketed root finding."""
    if not 0 < y <= 1:
        raise ValueError("erfc inverse needs 0 < y <= 1")
    if y == 1:
        return 0.0
    hi = 1.0
    while erfc(hi) > y:
        hi *= 2
    return brentq(lambda x: erfc(x) - y, 0.0, hi, xtol=1e-14, rtol=1e-15)


def q_factor(ber: float) -> float:
    """Linear Q-factor ``sqrt(2) erfc^-1(2 ber)``; ``inf`` for ``ber = 0``."""
    if ber == 0:
        return math.inf
    if not 0 < ber <= 0.5:
        raise ValueError("ber must lie in [0, 0.5]")
    return math.sqrt(2) * erfc_inverse(2 * ber)


def q_factor_db(ber: float) -> float:
    q = q_factor(ber)
    if q == 0:
        return -math.inf
    return 20 * math.log10(q)


def ber_from_q(q: float) -> float:
    return 0.5 * float(erfc(q / math.sqrt(2)))


@dataclass(frozen=True)
class PamLabeling:
    """Gray-labelled PAM: ``points`` in increasing order, ``labels`` ``(2^m, m)``.

    The first label bit is the sign (1 for negative points); the rest is the
    reflected-binary code of the amplitude index, mirrored for negative
    points so neighbours differ in one bit.
    """

    points: np.ndarray
    labels: np.ndarray

    @classmethod
    def gray(cls, bits_per_pam: int, scale: float = 1.0) -> "PamLabeling":
        n_amp = 2 ** (bits_per_pam - 1)
        amp = np.arange(1, 2 * n_amp, 2)
        lab = np.array([int_to_bits(gray_code(i), bits_per_pam - 1) for i in range(n_amp)],
                       dtype=np.uint8).reshape(n_amp, bits_per_pam - 1)
        neg = np.hstack([np.ones((n_amp, 1), dtype=np.uint8), lab[::-1]])
        pos = np.hstack([np.zeros((n_amp, 1), dtype=np.uint8), lab])
        return cls(np.concatenate([-amp[::-1], amp]) * scale, np.vstack([neg, pos]))

    @classmethod
    def from_constellation(cls, c: ShapedConstellation) -> "PamLabeling":
        return cls(c.pam_points() * c.scale, c.pam_labels())

    @property
    def bits_per_pam(self) -> int:
        return self.labels.shape[1]

    def nearest(self, y) -> np.ndarray:
        """Index of the nearest point for each real sample."""
        y = np.asarray(y, dtype=float)
        edges = (self.points[1:] + self.points[:-1]) / 2
        return np.searchsorted(edges, y)

    def priors(self, amplitude_probs=None) -> np.ndarray:
        """Point probabilities from amplitude probabilities and uniform signs."""
        n_amp = len(self.points) // 2
        pa = np.full(n_amp, 1.0 / n_amp) if amplitude_probs is None else np.asarray(amplitude_probs, float)
        if len(pa) != n_amp:
            raise ValueError(f"expected {n_amp} amplitude probabilities")
        return np.concatenate([pa[::-1], pa]) / 2


def _real_dims(x) -> np.ndarray:
    x = np.asarray(x).ravel()
    return np.concatenate([x.real, x.imag])


def uncoded_ber(sent, received, labeling: PamLabeling) -> float:
    """Bit error rate of per-dimension nearest-point decisions.

    ``sent`` are the transmitted complex symbols, which must lie on the
    labelling's grid.
    """
    tx = labeling.nearest(_real_dims(sent))
    if not np.allclose(labeling.points[tx], _real_dims(sent)):
        raise ValueError("sent symbols are not constellation points")
    rx = labeling.nearest(_real_dims(received))
    errors = np.count_nonzero(labeling.labels[tx] != labeling.labels[rx])
    return errors / (len(tx) * labeling.bits_per_pam)


def bit_equivocation(sent, received, labeling: PamLabeling, amplitude_probs=None, noise_var=None) -> np.ndarray:
    """Per-bit mean of ``-log2 P(b_i | y)`` over PAM dimensions, shape ``(m,)``.

    Posteriors use a Gaussian auxiliary channel with per-dimension variance
    ``noise_var`` (fitted as half the mean squared complex error by default).
    """
    x = _real_dims(sent)
    y = _real_dims(received)
    tx = labeling.nearest(x)
    if noise_var is None:
        noise_var = float(np.mean((y - x) ** 2))
    m = labeling.bits_per_pam
    if noise_var == 0:
        return np.zeros(m)
    logp = np.log(labeling.priors(amplitude_probs))
    # (samples, points) log joint of point and observation
    ll = logp[None, :] - (y[:, None] - labeling.points[None, :]) ** 2 / (2 * noise_var)
    denom = logsumexp(ll, axis=1)
    out = np.empty(m)
    for i in range(m):
        true_bit = labeling.labels[tx, i]
        masked = np.where(labeling.labels[None, :, i] == true_bit[:, None], ll, -np.inf)
        post = np.exp(logsumexp(masked, axis=1) - denom)
        out[i] = np.mean(-np.log2(np.maximum(post, POSTERIOR_FLOOR)))
    return out


def symbol_entropy(labeling: PamLabeling, amplitude_probs=None) -> float:
    """``H(P_s)`` of the QAM symbol built from two independent PAM dimensions."""
    return 2 * entropy(labeling.priors(amplitude_probs))


def air(sent, received, labeling: PamLabeling, amplitude_probs=None, rate_loss: float = 0.0,
        noise_var=None) -> float:
    """Achievable rate in bits per QAM symbol.

    ``H(P_s) - sum_i H(b_i | r) - 2 rate_loss`` with the ``2m`` bit
    equivocations of the two PAM dimensions.
    """
    n = np.asarray(sent).size
    if n < MIN_SYMBOLS_AIR:
        raise ValueError(f"need at least {MIN_SYMBOLS_AIR} symbols, got {n}")
    if noise_var is None:
        noise_var = float(np.mean(np.abs(np.asarray(received) - np.asarray(sent)) ** 2)) / 2
    eq = bit_equivocation(sent, received, labeling, amplitude_probs, noise_var)
    return symbol_entropy(labeling, amplitude_probs) - 2 * float(eq.sum()) - 2 * rate_loss


@dataclass
class MetricReport:
    """One run's metrics; serialized as a JSON object or a CSV row."""

    snr_eff_db: float
    q_factor_db: float
    ber: float
    air: float
    rate_loss: float
    launch_power_dbm: float
    seed: int
    config_hash: str
    label: str = ""

    def __post_init__(self):
        if not 0 <= self.ber <= 0.5:
            raise ValueError("ber must lie in [0, 0.5]")

    def to_json(self) -> str:
        return json.dumps({k: _jsonable(v) for k, v in asdict(self).items()}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        obj = json.loads(text)
        return cls(**{f.name: _from_jsonable(obj[f.name]) for f in fields(cls)})


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _from_jsonable(v):
    if v in ("inf", "-inf", "nan"):
        return float(v)
    return v


def evaluate(sent, received, labeling: PamLabeling, amplitude_probs=None, rate_loss=0.0,
             launch_power_dbm=0.0, seed=0, config_hash="", label="") -> MetricReport:
    ber = uncoded_ber(sent, received, labeling)
    return MetricReport(
        snr_eff(sent, received), q_factor_db(ber) if ber > 0 else math.inf, ber,
        air(sent, received, labeling, amplitude_probs, rate_loss), rate_loss, launch_power_dbm, seed,
        config_hash, label,
    )


def write_reports_csv(reports, path) -> None:
    names = [f.name for f in fields(MetricReport)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in reports:
            w.writerow([getattr(r, n) for n in names])
