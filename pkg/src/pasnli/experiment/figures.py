"""Tidy figure CSVs from run records, and threshold checks on those CSVs.

Every CSV has a leading ``figure`` column so :func:`verify_csv` knows which
checks apply.  Columns per figure id:

``power_sweep``
    scheme, blocklength, v, d, metric_name, launch_power_dbm, snr_eff_db,
    q_factor_db, ber, air (seed averages)
``fig9a`` / ``fig13``
    scheme, blocklength, v, d, metric_name, launch_power_dbm, snr_eff_db at
    the fitted optimum power
``fig9b``
    as ``fig9a`` with ``air``
``fig4`` / ``fig5``
    spans or baud_gbd, bw_hz; a final row with ``slope`` filled
``fig6`` / ``fig11``
    scheme, blocklength, v, metric_name, f, magnitude_db (seed-averaged
    energy spectra)
``fig12``
    n_spans, scheme, blocklength, d, variance
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict

import numpy as np

from ..nli import loglog_slope
from .runner import RunRecord, quadratic_optimum

FIGURES = {
    "power_sweep": "ssfm", "fig9a": "ssfm", "fig9b": "ssfm", "fig13": "ssfm",
    "fig4": "bandwidth", "fig5": "bandwidth", "fig6": "spectrum", "fig11": "spectrum", "fig12": "model",
}

# thresholds re-checked by verify
SPAN_SLOPE = (-1.1, -0.9)
BAUD_SLOPE = (-1.15, -0.85)
DIP_BAND = 0.02
DIP_SEPARATION_DB = 3.0
SELECTION_BAND = 0.05
SELECTION_DIP_DB = 1.0
BLOCKLENGTH_GAP_DB = 0.05
SELECTION_GAIN_DB = 0.1


class FigureError(ValueError):
    """Unknown figure id or a run that does not cover the figure's axes."""


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return "" if x is None else str(x)


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h)) for h in header])
    return buf.getvalue()


def _seed_means(rows, value_keys, group_keys):
    groups = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in group_keys)].append(r)
    out = []
    for g in sorted(groups, key=lambda t: tuple((x is None, x) for x in t)):
        rs = groups[g]
        item = dict(zip(group_keys, g))
        for k in value_keys:
            vals = [r[k] for r in rs]
            item[k] = float(np.mean(vals))
        item["n_seeds"] = len(rs)
        out.append(item)
    return out


SWEEP_GROUP = ("scheme", "blocklength", "v", "d", "metric", "power_dbm")


def _power_sweep(rec):
    rows = _seed_means(rec.rows, ("snr_eff_db", "q_factor_db", "ber", "air"), SWEEP_GROUP)
    for r in rows:
        r["metric_name"] = r.pop("metric")
        r["launch_power_dbm"] = r.pop("power_dbm")
    header = ["figure", "scheme", "blocklength", "v", "d", "metric_name", "launch_power_dbm", "snr_eff_db",
              "q_factor_db", "ber", "air", "n_seeds"]
    return header, rows


def _optimum(rec, value):
    sweep = _seed_means(rec.rows, (value,), SWEEP_GROUP)
    curves = defaultdict(list)
    for r in sweep:
        curves[(r["scheme"], r["blocklength"], r["v"], r["d"], r["metric"])].append((r["power_dbm"], r[value]))
    rows = []
    for (scheme, ell, v, d, metric), pts in sorted(curves.items()):
        p, y = zip(*pts)
        if len(p) < 2:
            raise FigureError(f"{scheme} l={ell}: a power optimum needs at least two launch powers")
        popt, yopt = quadratic_optimum(p, y)
        rows.append({"scheme": scheme, "blocklength": ell, "v": v, "d": d, "metric_name": metric,
                     "launch_power_dbm": popt, value: yopt})
    header = ["figure", "scheme", "blocklength", "v", "d", "metric_name", "launch_power_dbm", value]
    return header, rows


def _bandwidth(rec, axis):
    col = "spans" if axis == "spans" else "baud_gbd"
    pts = [r for r in rec.rows if r["axis"] == axis]
    if len(pts) < 2:
        raise FigureError(f"run does not sweep {col}")
    rows = [{col: r[col], "bw_hz": r["bw_hz"]} for r in pts]
    rows.append({"slope": loglog_slope([r[col] for r in pts], [r["bw_hz"] for r in pts])})
    return ["figure", col, "bw_hz", "slope"], rows


def _spectra(rec, want_selection):
    rows = rec.rows
    if want_selection and not any(r["v"] for r in rows):
        raise FigureError("run has no v > 0 points for a selection spectrum")
    groups = defaultdict(list)
    for r in rows:
        groups[(r["scheme"], r["blocklength"], r["v"], r["metric"], r["f"])].append(10 ** (r["magnitude_db"] / 10))
    out = []
    for (scheme, ell, v, metric, f), vals in sorted(groups.items()):
        out.append({"scheme": scheme, "blocklength": ell, "v": v, "metric_name": metric, "f": f,
                    "magnitude_db": 10 * math.log10(np.mean(vals)) if np.mean(vals) > 0 else -math.inf})
    return ["figure", "scheme", "blocklength", "v", "metric_name", "f", "magnitude_db"], out


def _model(rec):
    rows = _seed_means(rec.rows, ("variance",), ("n_spans", "scheme", "blocklength", "d"))
    return ["figure", "n_spans", "scheme", "blocklength", "d", "variance", "n_seeds"], rows


def figure_csv(rec: RunRecord, figure: str) -> str:
    """CSV text of ``figure`` built from ``rec``."""
    if figure not in FIGURES:
        raise FigureError(f"unknown figure id {figure!r}; choose from {', '.join(sorted(FIGURES))}")
    if FIGURES[figure] != rec.kind:
        raise FigureError(f"{figure} needs a {FIGURES[figure]} run, got a {rec.kind} run")
    if not rec.rows:
        raise FigureError("run record has no points")
    if figure == "power_sweep":
        header, rows = _power_sweep(rec)
    elif figure in ("fig9a", "fig13"):
        header, rows = _optimum(rec, "snr_eff_db")
    elif figure == "fig9b":
        header, rows = _optimum(rec, "air")
    elif figure == "fig4":
        header, rows = _bandwidth(rec, "spans")
    elif figure == "fig5":
        header, rows = _bandwidth(rec, "baud")
    elif figure in ("fig6", "fig11"):
        header, rows = _spectra(rec, figure == "fig11")
    else:
        header, rows = _model(rec)
    for r in rows:
        r["figure"] = figure
    return _to_csv(header, rows)


# verification

def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(x):
    return float(x) if x not in ("", None) else None


def _band_levels(rows, fraction, key):
    """Mean dB over ``|f| <= fraction / 2`` per curve ``key``."""
    levels = defaultdict(list)
    for r in rows:
        if abs(float(r["f"])) <= fraction / 2:
            levels[key(r)].append(float(r["magnitude_db"]))
    return {k: float(np.mean(v)) for k, v in levels.items()}


def _check_slope(rows, lo, hi, label):
    slope = next(_num(r["slope"]) for r in rows if r.get("slope"))
    return [(f"{label} slope {slope:.3f} in [{lo}, {hi}]", lo <= slope <= hi)]


def _check_dip(rows):
    levels = _band_levels([r for r in rows if r["v"] == "0"], DIP_BAND,
                          lambda r: (int(r["blocklength"]) or math.inf, r["scheme"]))
    order = sorted(levels)
    out = []
    for a, b in zip(order, order[1:]):
        gap = levels[b] - levels[a]
        out.append((f"{a[1]}-{a[0]} {levels[a]:.2f} dB below {b[1]}-{b[0]} {levels[b]:.2f} dB by "
                    f"{gap:.2f} >= {DIP_SEPARATION_DB} dB", gap >= DIP_SEPARATION_DB))
    return out


def _check_selection_spectrum(rows):
    levels = _band_levels(rows, SELECTION_BAND, lambda r: (r["scheme"], r["blocklength"], int(r["v"]), r["metric_name"]))
    out = []
    for (scheme, ell, v, metric), lvl in sorted(levels.items()):
        if v == 0 or metric != "lsas":
            continue
        ref = levels.get((scheme, ell, 0, "none"))
        if ref is None:
            continue
        out.append((f"{scheme}-{ell} v={v} {metric} below v=0 by {ref - lvl:.2f} > {SELECTION_DIP_DB} dB",
                    ref - lvl > SELECTION_DIP_DB))
    return out


def _check_snr_figure(rows, value="snr_eff_db"):
    out = []
    vals = {(r["scheme"], int(r["blocklength"]), int(r["v"]), r["metric_name"]): float(r[value]) for r in rows}
    # plain shaping: decreasing with blocklength, ideal (0) last
    plain = sorted(((ell or math.inf, s), y) for (s, ell, v, m), y in vals.items() if v == 0)
    for (a, ya), (b, yb) in zip(plain, plain[1:]):
        out.append((f"{a[1]}-{a[0]} {ya:.3f} dB above {b[1]}-{b[0]} {yb:.3f} dB by > {BLOCKLENGTH_GAP_DB}",
                    ya - yb > BLOCKLENGTH_GAP_DB))
    # selection: lsas >= edi >= none, lsas gain over none
    for (s, ell, v, m), y in sorted(vals.items()):
        if v == 0 or m != "lsas":
            continue
        none = vals.get((s, ell, 0, "none"))
        edi = vals.get((s, ell, v, "edi"))
        if edi is not None:
            out.append((f"{s}-{ell} lsas {y:.3f} >= edi {edi:.3f}", y >= edi))
        if none is not None:
            if edi is not None:
                out.append((f"{s}-{ell} edi {edi:.3f} >= v=0 {none:.3f}", edi >= none))
            out.append((f"{s}-{ell} lsas gain {y - none:.3f} >= {SELECTION_GAIN_DB} dB", y - none >= SELECTION_GAIN_DB))
    return out


def _check_kess(rows):
    vals = {(r["scheme"], int(r["v"]), r["metric_name"]): float(r["snr_eff_db"]) for r in rows}
    out = []
    ess = next((y for (s, v, m), y in vals.items() if s == "ess" and v == 0), None)
    kess = next((y for (s, v, m), y in vals.items() if s == "kess" and v == 0), None)
    sel = next((y for (s, v, m), y in vals.items() if s == "kess" and v > 0 and m == "lsas"), None)
    if ess is not None and kess is not None:
        out.append((f"kess {kess:.3f} > ess {ess:.3f}", kess > ess))
    if kess is not None and sel is not None:
        out.append((f"kess+lsas {sel:.3f} >= kess {kess:.3f}", sel >= kess))
    return out


def _check_model(rows):
    out = []
    var = {(int(r["n_spans"]), r["scheme"], int(r["blocklength"]), int(r["d"])): float(r["variance"]) for r in rows}
    for (n, s, ell, d), y in sorted(var.items()):
        if n > 1 and d == 2 and (n, s, ell, 1) in var:
            out.append((f"{n} spans {s}-{ell}: 2D {y:.4g} < 1D {var[(n, s, ell, 1)]:.4g}", y < var[(n, s, ell, 1)]))
        if n == 1 and d == 4 and (n, s, ell, 2) in var:
            out.append((f"1 span {s}-{ell}: 4D {y:.4g} <= 2D {var[(n, s, ell, 2)]:.4g}", y <= var[(n, s, ell, 2)]))
    return out


def _check_finite(rows):
    bad = [r for r in rows for k, x in r.items() if k not in ("figure", "scheme", "metric_name")
           and x not in ("", None) and math.isnan(float(x))]
    return [(f"{len(rows)} rows numeric", not bad)]


def verify_rows(rows) -> list:
    """``(description, passed)`` for every threshold applicable to the figure."""
    if not rows:
        raise FigureError("empty CSV")
    fig = rows[0].get("figure")
    if fig not in FIGURES:
        raise FigureError(f"unknown figure id {fig!r}")
    checks = _check_finite(rows)
    if fig == "fig4":
        checks += _check_slope(rows, *SPAN_SLOPE, "bandwidth vs spans")
    elif fig == "fig5":
        checks += _check_slope(rows, *BAUD_SLOPE, "bandwidth vs baud rate")
    elif fig == "fig6":
        checks += _check_dip(rows)
    elif fig == "fig11":
        checks += _check_selection_spectrum(rows)
    elif fig == "fig9a":
        checks += _check_snr_figure(rows)
    elif fig == "fig13":
        checks += _check_kess(rows)
    elif fig == "fig12":
        checks += _check_model(rows)
    return checks


def verify_csv(path) -> list:
    return verify_rows(read_csv(path))
