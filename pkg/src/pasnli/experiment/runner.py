"""Sweep execution: one job per sweep point, merged deterministically by key."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..fiber import modulate, propagate, receive
from ..metrics import PamLabeling, evaluate
from ..nli import (
    aggregate_energy,
    build_filter_bank,
    energy_spectrum,
    filter_bandwidth_3db,
    predict_distortion,
)
from ..nli.filters import NliFilterBank
from ..mapping import frame_energy_sequences
from .config import ExperimentConfig
from .transmit import generate_frame


@dataclass(frozen=True)
class SweepPoint:
    """One job.  ``blocklength`` is 0 for i.i.d. (ideal) shaping."""

    scheme: str
    shaper: str
    blocklength: int
    v: int
    d: int
    metric: str
    power_dbm: float
    seed: int

    def key(self) -> tuple:
        return (self.scheme, self.blocklength, self.d, self.v, self.metric, self.power_dbm, self.seed)


@dataclass
class RunRecord:
    """All per-point result rows of a run plus timing counters."""

    name: str
    kind: str
    config_hash: str
    config: dict
    rows: list
    wall_clock_s: float = 0.0
    point_seconds: dict = field(default_factory=dict)
    symbols_per_second: float = 0.0

    def __post_init__(self):
        keys = [tuple(r["key"]) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate sweep point in run record")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RunRecord":
        path = Path(path)
        if path.is_dir():
            path = path / "record.json"
        return cls.from_json(path.read_text())


def sweep_points(cfg: ExperimentConfig, powers=None) -> list:
    powers = cfg.launch_powers if powers is None else powers
    pts = []
    for s in cfg.schemes:
        ells = s.blocklengths if s.type != "ideal" else (0,)
        variants = cfg.selection_variants() if s.type != "ideal" else [(0, d, "none") for d in cfg.d]
        for ell in ells:
            for v, d, metric in variants:
                for p in powers:
                    for seed in cfg.seeds:
                        pts.append(SweepPoint(s.name, s.type, int(ell), v, d, metric, float(p), int(seed)))
    return sorted(pts, key=SweepPoint.key)


# filter taps cache

def cache_dir() -> Path:
    return Path(os.environ.get("PASNLI_CACHE_DIR", Path.home() / ".cache" / "pasnli"))


def bank_cache_path(cfg: ExperimentConfig, directory=None) -> Path:
    link = cfg.link
    tag = f"{link.link_hash()}-g{link.gamma_per_w_km!r}-c{link.n_channels}-t{cfg.nli_threshold!r}" \
          f"-m{cfg.nli_max_taps}-s{int(cfg.nli_simplified)}"
    return Path(directory or cache_dir()) / f"taps-{tag}.json"


def filter_bank(cfg: ExperimentConfig, directory=None, use_cache=True) -> NliFilterBank:
    """NLI filter bank of the configured link, loaded from or stored in the cache."""
    path = bank_cache_path(cfg, directory)
    if use_cache and path.exists():
        return NliFilterBank.load(path)
    bank = build_filter_bank(cfg.link, threshold=cfg.nli_threshold, max_taps=cfg.nli_max_taps,
                             simplified=cfg.nli_simplified)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        bank.save(tmp)
        tmp.replace(path)
    return bank


def clear_cache(directory=None) -> int:
    d = Path(directory or cache_dir())
    n = 0
    for p in d.glob("taps-*.json"):
        p.unlink()
        n += 1
    return n


def _needs_bank(cfg: ExperimentConfig) -> bool:
    return cfg.kind == "model" or any(v and m == "lsas" for v, _, m in cfg.selection_variants())


# per-point jobs

def _frame(cfg: ExperimentConfig, pt: SweepPoint, link, bank):
    rng = np.random.default_rng([pt.seed, 0])
    sel = cfg.selection(pt.v, pt.d, pt.metric)
    return generate_frame(pt.shaper, pt.blocklength or None, link, cfg.bits_per_pam, cfg.rate, sel,
                          cfg.n_symbols, rng, bank=bank if pt.metric == "lsas" else None)


def _ssfm_point(cfg: ExperimentConfig, pt: SweepPoint, bank, chash: str) -> list:
    link = cfg.link.replace(launch_power_dbm=pt.power_dbm)
    tf = _frame(cfg, pt, link, bank)
    wf = modulate(tf.frame, link)
    out, steps = propagate(wf, link, seed=[pt.seed, 1], return_steps=True)
    ci = list(link.channel_indices).index(0)
    r = receive(out, link, channel=0)
    s = out.tx_frame.symbols[ci]
    raw = tf.frame.symbols[ci]
    scale = math.sqrt(np.mean(np.abs(s) ** 2) / np.mean(np.abs(raw) ** 2))
    rep = evaluate(s, r, PamLabeling.gray(cfg.bits_per_pam, scale), tf.amplitude_probs[ci],
                   float(tf.rate_loss[ci]), pt.power_dbm, pt.seed, chash)
    row = asdict(pt)
    row.update(snr_eff_db=rep.snr_eff_db, q_factor_db=rep.q_factor_db, ber=rep.ber, air=rep.air,
               rate_loss=rep.rate_loss, steps=steps, evaluations=tf.evaluations, n_symbols=int(s.shape[-1]))
    return [row]


def _spectrum_point(cfg: ExperimentConfig, pt: SweepPoint, bank, chash: str) -> list:
    tf = _frame(cfg, pt, cfg.link, bank)
    ci = list(cfg.link.channel_indices).index(0)
    e = frame_energy_sequences(tf.frame)[ci]
    f, spec = energy_spectrum(aggregate_energy(e, p=0), nperseg=cfg.nperseg)
    base = asdict(pt)
    return [dict(base, f=float(fi), magnitude_db=float(si)) for fi, si in zip(f, spec)]


def _model_point(cfg: ExperimentConfig, pt: SweepPoint, bank, chash: str) -> list:
    tf = _frame(cfg, pt, cfg.link, bank)
    e = frame_energy_sequences(tf.frame)
    field_ = predict_distortion(e, bank, 0, "x")
    row = asdict(pt)
    row.update(n_spans=cfg.link.n_spans, variance=float(np.var(field_.variation_sum)))
    return [row]


JOBS = {"ssfm": _ssfm_point, "spectrum": _spectrum_point, "model": _model_point}


def _run_job(args):
    cfg, pt, bank, chash = args
    t = time.perf_counter()
    rows = JOBS[cfg.kind](cfg, pt, bank, chash)
    for r in rows:
        # spectra contribute one row per frequency
        r["key"] = list(pt.key()) + ([r["f"]] if "f" in r else [])
    return pt.key(), rows, time.perf_counter() - t


def _bandwidth_rows(cfg: ExperimentConfig) -> list:
    """3-dB bandwidth of the SPM filter versus span count and versus baud rate."""
    rows = []
    base = cfg.link.replace(n_channels=1)

    def bw(link):
        b = build_filter_bank(link, channels=(0,), threshold=cfg.nli_threshold, max_taps=cfg.nli_max_taps)
        return float(filter_bandwidth_3db(b.tap(0, 0, "x", "x"), link.baud_rate_gbd * 1e9))

    for n in cfg.spans:
        rows.append({"axis": "spans", "spans": n, "baud_gbd": base.baud_rate_gbd,
                     "bw_hz": bw(base.replace(n_spans=n)), "key": ["spans", n]})
    for b in cfg.baud_rates:
        rows.append({"axis": "baud", "spans": base.n_spans, "baud_gbd": b,
                     "bw_hz": bw(base.replace(baud_rate_gbd=b)), "key": ["baud", b]})
    return rows


def run(cfg: ExperimentConfig, workers: int = 1, bank=None, log=print) -> RunRecord:
    """Execute every sweep point; ``workers = 1`` is the reference serial mode."""
    t0 = time.perf_counter()
    chash = cfg.config_hash()
    if cfg.kind == "bandwidth":
        rows = _bandwidth_rows(cfg)
        wall = time.perf_counter() - t0
        return RunRecord(cfg.name, cfg.kind, chash, cfg.raw, rows, wall, {"bandwidth": wall})
    powers = cfg.launch_powers if cfg.kind == "ssfm" else (cfg.link.launch_power_dbm,)
    pts = sweep_points(cfg, powers)
    if bank is None and _needs_bank(cfg):
        bank = filter_bank(cfg)
    jobs = [(cfg, pt, bank, chash) for pt in pts]
    results = {}
    if workers <= 1:
        for i, job in enumerate(jobs):
            key, rows, sec = _run_job(job)
            results[key] = (rows, sec)
            if log:
                log(f"[{i + 1}/{len(jobs)}] {key} {sec:.1f}s")
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for i, (key, rows, sec) in enumerate(ex.map(_run_job, jobs)):
                results[key] = (rows, sec)
                if log:
                    log(f"[{i + 1}/{len(jobs)}] {key} {sec:.1f}s")
    rows = [r for k in sorted(results) for r in results[k][0]]
    seconds = {json.dumps(list(k)): results[k][1] for k in sorted(results)}
    wall = time.perf_counter() - t0
    n_sym = sum(r.get("n_symbols", 0) for r in rows)
    return RunRecord(cfg.name, cfg.kind, chash, cfg.raw, rows, wall, seconds, n_sym / wall if wall else 0.0)


def quadratic_optimum(x, y) -> tuple:
    """Peak of ``y(x)``: vertex of a parabola through the grid maximum and its neighbours.

    Falls back to the grid maximum when the three points are not concave
    or the vertex leaves their bracket.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    i = int(np.argmax(y))
    if len(x) < 3:
        return float(x[i]), float(y[i])
    j = min(max(i - 1, 0), len(x) - 3)
    xs, ys = x[j:j + 3], y[j:j + 3]
    a, b, c = np.polyfit(xs, ys, 2)
    if a >= 0:
        return float(x[i]), float(y[i])
    xv = -b / (2 * a)
    if not xs[0] <= xv <= xs[-1]:
        return float(x[i]), float(y[i])
    return float(xv), float(np.polyval([a, b, c], xv))
