"""Command line: run sweeps, emit figure CSVs, verify thresholds, manage the tap cache.

Exit codes: 0 success, 1 usage or data error, 2 schema error, 3 failed
verification.
"""

from __future__ import annotations

import argparse
import copy
import sys
from pathlib import Path

from .config import PRESETS, SchemaError, from_dict, load_config
from .figures import FigureError, figure_csv, verify_csv
from .runner import RunRecord, clear_cache, filter_bank, run

EXIT_OK, EXIT_ERROR, EXIT_SCHEMA, EXIT_VERIFY = 0, 1, 2, 3


def _load(source: str, args):
    """Config from a preset name or a YAML file, with command-line overrides applied."""
    if source in PRESETS:
        raw = copy.deepcopy(PRESETS[source])
    else:
        raw = load_config(source).raw
    if getattr(args, "seed", None) is not None:
        raw.setdefault("sweep", {})["seeds"] = [args.seed]
    if getattr(args, "n_symbols", None) is not None:
        raw.setdefault("sweep", {})["n_symbols"] = args.n_symbols
    if getattr(args, "max_nl_phase", None) is not None:
        raw["link"]["max_nl_phase"] = args.max_nl_phase
    if getattr(args, "out", None):
        raw["output"] = {"directory": args.out}
    return from_dict(raw)


def cmd_run(args) -> int:
    cfg = _load(args.config, args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
    rec = run(cfg, workers=args.workers, log=log)
    rec.save(out / "record.json")
    for fig in cfg.figures:
        (out / f"{fig}.csv").write_text(figure_csv(rec, fig))
    print(f"{cfg.name}: {len(rec.rows)} rows in {rec.wall_clock_s:.1f} s -> {out}")
    return EXIT_OK


def cmd_emit(args) -> int:
    rec = RunRecord.load(args.run)
    text = figure_csv(rec, args.figure)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    ok = True
    for desc, passed in verify_csv(args.csv):
        print(f"{'PASS' if passed else 'FAIL'} {desc}")
        ok &= passed
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_cache(args) -> int:
    if args.action == "clear":
        print(f"removed {clear_cache(args.cache_dir)} cached filter banks")
        return EXIT_OK
    if not args.config:
        print("cache build needs a config or preset", file=sys.stderr)
        return EXIT_ERROR
    cfg = _load(args.config, args)
    bank = filter_bank(cfg, args.cache_dir)
    print(f"filter bank for {cfg.name}: {len(bank.taps)} filters, half width {bank.half_width}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pasnli", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute every sweep point of a config")
    p.add_argument("config", help=f"YAML file or preset ({', '.join(PRESETS)})")
    p.add_argument("--seed", type=int, help="replace the seed list by this seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes (1 = reference serial mode)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--n-symbols", type=int, help="symbols per channel and polarization")
    p.add_argument("--max-nl-phase", type=float, help="split-step nonlinear phase bound in rad")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("emit", help="write a figure CSV from a run")
    p.add_argument("run", help="run directory or record.json")
    p.add_argument("figure")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("verify", help="re-check thresholds on a figure CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cache", help="build or clear cached NLI filter taps")
    p.add_argument("action", choices=("build", "clear"))
    p.add_argument("config", nargs="?")
    p.add_argument("--cache-dir")
    p.set_defaults(func=cmd_cache)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(exc, file=sys.stderr)
        return EXIT_SCHEMA
    except (FigureError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
