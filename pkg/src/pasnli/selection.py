"""Sequence selection with flipping bits, scored by LSAS or EDI.

Each amplitude-shaper invocation receives ``v`` flipping bits followed by
``k - v`` information bits, so every information block has ``2^v``
candidate amplitude blocks.  A time slot of ``l/d`` symbols is fed by
``2 * n_pol / d`` shaper invocations; the candidate with the smallest
metric is transmitted.

The LSAS metric of a slot covering times ``n`` in ``[t0, t0 + l/d)`` is

    sum_n sum_{p in P} E_p(n) * (sum_{p' in P} sum_{c' in C~} Delta D_{p,p'}^(c,c')(n))^2

where ``Delta D`` is the filtered energy deviation.  Deviations are taken
from the already transmitted past of the own channel, the candidate itself
and fully selected neighbour channels; future symbols and channels not yet
selected contribute zero deviation.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .mapping import blocks_per_group, map_amplitudes
from .nli.distortion import correlate
from .nli.filters import NliFilterBank
from .shaping_core import int_to_bits


@dataclass(frozen=True)
class SelectionConfig:
    """Flipping bits ``v``, mapping dimension ``d`` and the scoring metric.

    ``lsas_channels`` are offsets ``c' - c``; ``joint`` scores every
    combination of per-shaper patterns.  Otherwise each shaper's pattern is
    selected on its own, with the other blocks of the slot fixed to their
    already selected candidates (``sequential``) or to pattern 0.
    """

    v: int = 0
    d: int = 1
    metric: str = "lsas"
    lsas_channels: tuple = (-1, 0, 1)
    lsas_pols: tuple = ("x", "y")
    edi_window: int = 100
    joint: bool = False
    sequential: bool = True

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("v must be >= 0")
        if self.d not in (1, 2, 4):
            raise ValueError("d must be 1, 2 or 4")
        if self.metric not in ("lsas", "edi"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.edi_window % 2:
            raise ValueError("edi_window must be even")

    def candidates_per_slot(self, n_pol: int = 2) -> int:
        return 2 ** (blocks_per_group(self.d, n_pol) * self.v)


@dataclass(frozen=True)
class CandidateScore:
    pattern: int
    metric: float
    blocks: np.ndarray = field(repr=False)


def edi(energy, w: int, ell=None) -> float:
    """Energy dispersion index of one block.

    Uses positions ``n = 1 + w/2 .. l - w/2`` (1-based): the empirical mean
    over those positions, windowed sums of ``w + 1`` deviations and the
    normalization ``1 / (l - w - 1)``.
    """
    e = np.asarray(energy, dtype=float)
    ell = len(e) if ell is None else ell
    if ell <= w + 1:
        raise ValueError(f"blocklength {ell} too short for window {w}")
    h = w // 2
    core = e[h:ell - h]  # 0-based indices w/2 .. l-w/2-1
    mean = core.mean()
    c = np.concatenate([[0.0], np.cumsum(e - mean)])
    # windowed sum over n-w/2 .. n+w/2 for each core position n
    n = np.arange(h, ell - h)
    sums = c[n + h + 1] - c[n - h]
    return float(np.sum(sums**2) / (ell - w - 1))


def edi_reference(energy, w: int) -> float:
    """Literal evaluation of the EDI definition; for testing."""
    e = list(map(float, energy))
    ell = len(e)
    idx = range(1 + w // 2, ell - w // 2 + 1)  # 1-based
    mean = sum(e[n - 1] for n in idx) / (ell - w)
    total = 0.0
    for n in idx:
        s = sum(e[n + m - 1] - mean for m in range(-w // 2, w // 2 + 1))
        total += s * s
    return total / (ell - w - 1)


def lsas_sequence(energy, h, mean_energy, weighted=True, positions=None) -> float:
    """Single-sequence LSAS: ``sum_n w(n) (sum_m (E(n+m) - E_bar) h(m))^2``.

    ``w(n) = E(n)`` when ``weighted``, else 1.  Samples outside the sequence
    count as zero deviation.  ``positions`` restricts the outer sum.
    """
    e = np.asarray(energy, dtype=float)
    dd = correlate(e - mean_energy, h, "mean", 0.0)
    if positions is not None:
        e, dd = e[positions], dd[positions]
    return float(np.sum((e if weighted else 1.0) * dd**2))


def lsas_direct(energies, bank: NliFilterBank, c, pols, channels, t0: int, length: int, mean_energy) -> float:
    """Triple-loop LSAS of the slot ``[t0, t0 + length)``; for testing.

    ``energies`` is ``(n_channels, n_pol, N)`` holding the deviation context:
    entries outside the causal context must already equal ``mean_energy``.
    """
    M = bank.half_width
    N = energies.shape[-1]
    total = 0.0
    for n in range(t0, t0 + length):
        for p in pols:
            pi = bank.pols.index(p)
            acc = 0.0
            for cp in channels:
                ci = bank.channels.index(cp)
                for pp in pols:
                    pj = bank.pols.index(pp)
                    h = bank.tap(c, cp, p, pp)
                    for m in range(-M, M + 1):
                        if 0 <= n + m < N:
                            acc += (energies[ci, pj, n + m] - mean_energy[ci, pj]) * h[m + M]
            ci0 = bank.channels.index(c)
            total += energies[ci0, pi, n] * acc**2
    return total


def select(scores) -> int:
    """Index of the smallest metric; ties go to the lowest index."""
    return int(np.argmin(np.asarray(scores, dtype=float)))


def select_best(candidates, scorer) -> CandidateScore:
    """Score ``(pattern, blocks)`` candidates and keep the smallest metric."""
    scored = [CandidateScore(pat, float(scorer(blocks)), blocks) for pat, blocks in candidates]
    if not scored:
        raise ValueError("no candidates")
    return min(scored, key=lambda c: (c.metric, c.pattern))


def enumerate_candidates(info_bits, v: int, shaper, d: int, n_pol: int = 2):
    """All joint candidates for one slot.

    ``info_bits`` is ``(blocks_per_group, k - v)``.  Returns a list of
    ``(patterns, blocks)`` where ``patterns`` has one integer per shaper
    invocation and ``blocks`` is ``(blocks_per_group, l)``.
    """
    g = blocks_per_group(d, n_pol)
    info = np.asarray(info_bits, dtype=np.uint8).reshape(g, -1)
    per = [[shaper.encode(np.concatenate([int_to_bits(u, v), info[j]])) for u in range(2**v)] for j in range(g)]
    out = []
    for pats in itertools.product(range(2**v), repeat=g):
        out.append((pats, np.stack([per[j][u] for j, u in enumerate(pats)])))
    return out


def strip_flipping_bits(shaper, block, v: int) -> np.ndarray:
    return shaper.decode(block)[v:]


class _SlotScorer:
    """LSAS/EDI evaluation for one channel with a fixed causal context."""

    def __init__(self, cfg: SelectionConfig, n_pol: int, length: int, bank, channel, neighbour_dev, mean_energy):
        self.cfg = cfg
        self.n_pol = n_pol
        self.L = length
        self.bank = bank
        self.c = channel
        self.mean = np.asarray(mean_energy, dtype=float)
        if cfg.metric == "edi":
            self.edi_pols = [i for i, p in enumerate(("x", "y")[:n_pol]) if p in cfg.lsas_pols]
            return
        pols = tuple(p for p in cfg.lsas_pols if p in bank.pols[:n_pol])
        self.pols = pols
        self.pol_idx = [bank.pols.index(p) for p in pols]
        M = bank.half_width
        self.M = M
        L = length
        # own-channel Toeplitz operators, candidate part and past part
        n = np.arange(L)[:, None]
        j = np.arange(L)[None, :]
        past = np.arange(-M, 0)[None, :]
        self.H_own = {}
        self.H_past = {}
        for p in pols:
            for pp in pols:
                h = bank.tap(channel, channel, p, pp)
                hm = len(h) // 2
                lag = j - n
                self.H_own[(p, pp)] = np.where(np.abs(lag) <= hm, h[np.clip(lag + hm, 0, len(h) - 1)], 0.0)
                lag = past - n
                self.H_past[(p, pp)] = np.where(np.abs(lag) <= hm, h[np.clip(lag + hm, 0, len(h) - 1)], 0.0)
        # distortion from selected neighbours over the whole stream
        self.neigh = {}
        for dc in cfg.lsas_channels:
            cp = channel + dc
            if cp == channel or cp not in neighbour_dev or cp not in bank.channels:
                continue
            for p in pols:
                acc = 0.0
                for pp in pols:
                    acc = acc + correlate(neighbour_dev[cp][bank.pols.index(pp)], bank.tap(channel, cp, p, pp), "mean", 0.0)
                self.neigh[(cp, p)] = acc

    def context(self, own_dev_hist, t0):
        """Distortion at the slot from the past and from neighbours, per LSAS pol."""
        if self.cfg.metric == "edi":
            return None
        M = self.M
        base = {}
        for p in self.pols:
            acc = np.zeros(self.L)
            for pp in self.pols:
                pj = self.bank.pols.index(pp)
                window = np.zeros(M)
                lo = max(0, t0 - M)
                if t0 > 0:
                    window[M - (t0 - lo):] = own_dev_hist[pj, lo:t0]
                acc += self.H_past[(p, pp)] @ window
            for (cp, pq), d in self.neigh.items():
                if pq == p:
                    acc += d[t0:t0 + self.L]
            base[p] = acc
        return base

    def scores(self, energies, base) -> np.ndarray:
        """``energies``: ``(K, n_pol, L)`` candidate energies of this channel."""
        if self.cfg.metric == "edi":
            w = self.cfg.edi_window
            return np.array([sum(edi(e[pi], w) for pi in self.edi_pols) for e in energies])
        dev = energies - self.mean[None, :, None]
        total = np.zeros(len(energies))
        for p, pi in zip(self.pols, self.pol_idx):
            dd = np.tile(base[p], (len(energies), 1))
            for pp, pj in zip(self.pols, self.pol_idx):
                dd += dev[:, pj] @ self.H_own[(p, pp)].T
            total += np.sum(energies[:, pi] * dd**2, axis=1)
        return total


@dataclass
class StreamSelection:
    """Result of selecting a whole stream of slots for one channel."""

    blocks: np.ndarray        # (n_blocks, l) transmitted amplitude blocks
    patterns: np.ndarray      # (n_blocks,) chosen flipping patterns
    metrics: list             # per slot: list of candidate metric values
    evaluations: int = 0

    def energies(self, d: int, n_pol: int) -> np.ndarray:
        comps = map_amplitudes(self.blocks, d, n_pol).astype(float)
        return comps[0::2] ** 2 + comps[1::2] ** 2


def _slot_energies(blocks, d, n_pol):
    comps = map_amplitudes(blocks, d, n_pol).astype(float)
    return comps[0::2] ** 2 + comps[1::2] ** 2


def select_stream(info_bits, shaper, cfg: SelectionConfig, bank: NliFilterBank | None = None,
                  n_pol: int = 2, channel: int = 0, neighbour_energies=None, mean_energy=None,
                  log=None) -> StreamSelection:
    """Select flipping patterns for consecutive slots of one channel.

    Parameters
    ----------
    info_bits : array (n_blocks, k - v)
        Information bits per shaper invocation, in transmission order.
    neighbour_energies : dict, optional
        ``{c': (n_pol, N)}`` energies of already selected channels.
    mean_energy : array (n_pol,), optional
        Reference mean energy.  Defaults to the empirical mean of the frame
        encoded with all-zero flipping patterns.
    log : file-like, optional
        Receives one JSON line per slot.
    """
    v, d = cfg.v, cfg.d
    g = blocks_per_group(d, n_pol)
    info = np.asarray(info_bits, dtype=np.uint8)
    n_blocks = info.shape[0]
    if n_blocks % g:
        raise ValueError(f"need a multiple of {g} blocks")
    if info.shape[1] != shaper.k - v:
        raise ValueError(f"expected {shaper.k - v} info bits per block, got {info.shape[1]}")
    ell = shaper.blocklength
    L = ell // d
    n_slots = n_blocks // g

    def encode(j, u):
        return shaper.encode(np.concatenate([int_to_bits(u, v), info[j]]))

    base_blocks = np.stack([encode(j, 0) for j in range(n_blocks)]) if v else None
    if v == 0:
        blocks = np.stack([encode(j, 0) for j in range(n_blocks)])
        return StreamSelection(blocks, np.zeros(n_blocks, dtype=np.int64), [], 0)

    if mean_energy is None:
        mean_energy = _slot_energies(base_blocks, d, n_pol).mean(axis=1)
    mean_energy = np.asarray(mean_energy, dtype=float)
    neighbour_dev = {}
    for cp, e in (neighbour_energies or {}).items():
        neighbour_dev[cp] = np.asarray(e, dtype=float) - mean_energy[:, None]
    scorer = _SlotScorer(cfg, n_pol, L, bank, channel, neighbour_dev, mean_energy)

    chosen = base_blocks.copy()
    patterns = np.zeros(n_blocks, dtype=np.int64)
    own_dev = np.zeros((n_pol, n_slots * L))
    metrics = []
    evaluations = 0
    for s in range(n_slots):
        t0 = s * L
        idx = range(s * g, (s + 1) * g)
        base = scorer.context(own_dev, t0)
        cands = {j: [base_blocks[j]] + [encode(j, u) for u in range(1, 2**v)] for j in idx}
        if cfg.joint:
            combos = list(itertools.product(range(2**v), repeat=g))
            group = np.stack([np.stack([cands[j][u] for j, u in zip(idx, pats)]) for pats in combos])
            e = np.stack([_slot_energies(b, d, n_pol) for b in group])
            sc = scorer.scores(e, base)
            evaluations += len(sc)
            best = combos[select(sc)]
            for j, u in zip(idx, best):
                chosen[j], patterns[j] = cands[j][u], u
            metrics.append([float(x) for x in sc])
        else:
            slot_metrics = []
            for pos, j in enumerate(idx):
                # earlier blocks of the slot are already final in ``chosen``
                partners = chosen if cfg.sequential else base_blocks
                group = np.stack([partners[s * g:(s + 1) * g]] * 2**v)
                for u in range(2**v):
                    group[u, pos] = cands[j][u]
                e = np.stack([_slot_energies(b, d, n_pol) for b in group])
                sc = scorer.scores(e, base)
                evaluations += len(sc)
                u = select(sc)
                chosen[j], patterns[j] = cands[j][u], u
                slot_metrics.append([float(x) for x in sc])
            metrics.append(slot_metrics)
        own_dev[:, t0:t0 + L] = _slot_energies(chosen[s * g:(s + 1) * g], d, n_pol) - mean_energy[:, None]
        if log is not None:
            log.write(json.dumps({
                "channel": channel, "slot": s, "patterns": [int(patterns[j]) for j in idx],
                "metrics": metrics[-1],
            }) + "\n")
    return StreamSelection(chosen, patterns, metrics, evaluations)


def outer_to_inner(channels) -> list:
    """Processing order for greedy WDM selection: edge channels first."""
    return sorted(channels, key=lambda c: (-abs(c), c))


def greedy_wdm_select(info_bits_per_channel: dict, shaper, cfg: SelectionConfig, bank: NliFilterBank,
                      n_pol: int = 2, order=None, mean_energy=None, log=None) -> dict:
    """Select every channel in turn, treating already selected ones as fixed neighbours."""
    order = outer_to_inner(info_bits_per_channel) if order is None else list(order)
    done = {}
    energies = {}
    for c in order:
        res = select_stream(info_bits_per_channel[c], shaper, cfg, bank, n_pol, c,
                            neighbour_energies=energies, mean_energy=mean_energy, log=log)
        done[c] = res
        energies[c] = res.energies(cfg.d, n_pol)
    return done
