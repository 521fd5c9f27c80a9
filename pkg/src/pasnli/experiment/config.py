"""Experiment configuration: schema validation, presets and hashing.

A configuration is a YAML (or JSON) mapping::

    version: 1
    name: setup1-desk
    kind: ssfm                  # ssfm | spectrum | bandwidth | model
    link: {preset: setup1, n_channels: 3, n_spans: 4}
    shaping:
      bits_per_pam: 4
      rate: 2.4                 # information bits per amplitude
      schemes: [{type: ccdm, blocklengths: [108, 300]}]
    selection: {v: [0, 2], d: [1], metric: [lsas]}
    sweep: {launch_power_dbm: [-4, -2, 0], seeds: [1], n_symbols: 4096}
    figures: [fig9a, power_sweep]
    output: {directory: results/setup1-desk}

Every section except ``name`` and ``link`` has defaults.  Validation
collects all problems and reports each with its field path.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..fiber.config import ConfigError, LinkSystemConfig, setup1_link, setup2_link
from ..selection import SelectionConfig
from .transmit import SHAPER_TYPES

KINDS = ("ssfm", "spectrum", "bandwidth", "model")
METRICS = ("lsas", "edi")
LINK_PRESETS = {"setup1": setup1_link, "setup2": setup2_link}
LINK_FIELDS = {f.name: f for f in dataclasses.fields(LinkSystemConfig)}


class SchemaError(ValueError):
    """Invalid configuration; ``errors`` lists ``path: message`` strings."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class SchemeSpec:
    type: str
    blocklengths: tuple = ()
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or self.type


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    link: LinkSystemConfig
    bits_per_pam: int
    rate: float
    schemes: tuple
    v: tuple = (0,)
    d: tuple = (1,)
    metrics: tuple = ("lsas",)
    lsas_channels: tuple = (-1, 0, 1)
    lsas_pols: tuple = ("x", "y")
    edi_window: int = 100
    joint: bool = False
    sequential: bool = True
    launch_powers: tuple = (-6.5,)
    seeds: tuple = (1,)
    n_symbols: int = 2**16
    nli_threshold: float = 1e-4
    nli_max_taps: int = 4096
    nli_simplified: bool = False
    spans: tuple = (1, 10, 20, 40)
    baud_rates: tuple = (16.0, 32.0, 64.0)
    nperseg: int = 4096
    figures: tuple = ()
    output_dir: str = "results"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def selection(self, v: int, d: int, metric: str) -> SelectionConfig:
        return SelectionConfig(v=v, d=d, metric=metric if v else "lsas", lsas_channels=self.lsas_channels,
                               lsas_pols=self.lsas_pols, edi_window=self.edi_window, joint=self.joint,
                               sequential=self.sequential)

    def selection_variants(self):
        """``(v, d, metric)`` triples; ``v = 0`` carries metric ``none``."""
        out = []
        for d in self.d:
            for v in self.v:
                for m in (("none",) if v == 0 else self.metrics):
                    out.append((v, d, m))
        return out

    def config_hash(self) -> str:
        return config_hash(self.raw)


# schema: section -> {key: (types, check)}; checks return an error message or None
def _positive(x):
    return None if x > 0 else "must be positive"


def _nonneg_int(x):
    return None if x >= 0 else "must be >= 0"


def _choice(options):
    def check(x):
        return None if x in options else f"must be one of {', '.join(map(str, options))}"
    return check


def _even(x):
    return None if x % 2 == 0 and x > 0 else "must be a positive even integer"


NUM = (int, float)

SCHEMA = {
    "version": ((int,), _choice((1,))),
    "name": ((str,), None),
    "kind": ((str,), _choice(KINDS)),
    "link": "link",
    "shaping": {
        "bits_per_pam": ((int,), lambda x: None if 2 <= x <= 8 else "must be in 2..8"),
        "rate": (NUM, _positive),
        "schemes": "schemes",
    },
    "selection": {
        "v": ("list", (int,), _nonneg_int),
        "d": ("list", (int,), _choice((1, 2, 4))),
        "metric": ("list", (str,), _choice(METRICS)),
        "lsas_channels": ("list", (int,), None),
        "lsas_pols": ("list", (str,), _choice(("x", "y"))),
        "edi_window": ((int,), _even),
        "joint": ((bool,), None),
        "sequential": ((bool,), None),
    },
    "sweep": {
        "launch_power_dbm": ("list", NUM, None),
        "seeds": ("list", (int,), _nonneg_int),
        "n_symbols": ((int,), _positive),
        "spans": ("list", (int,), _positive),
        "baud_rates_gbd": ("list", NUM, _positive),
        "nperseg": ((int,), _positive),
    },
    "nli": {
        "threshold": (NUM, _positive),
        "max_taps": ((int,), _positive),
        "simplified": ((bool,), None),
    },
    "figures": ("list", (str,), None),
    "output": {"directory": ((str,), None)},
}
REQUIRED = ("name", "link")


def _type_ok(x, types):
    if bool in types:
        return isinstance(x, bool)
    return isinstance(x, types) and not isinstance(x, bool)


def _type_name(types):
    return " or ".join(t.__name__ for t in types)


def _check_value(path, x, spec, errors):
    if spec[0] == "list":
        _, types, check = spec
        if not isinstance(x, list):
            errors.append(f"{path}: expected a list")
            return
        if not x:
            errors.append(f"{path}: must not be empty")
        for i, item in enumerate(x):
            _check_value(f"{path}[{i}]", item, (types, check), errors)
        return
    types, check = spec
    if not _type_ok(x, types):
        errors.append(f"{path}: expected {_type_name(types)}, got {type(x).__name__}")
        return
    if check is not None:
        msg = check(x)
        if msg:
            errors.append(f"{path}: {msg}")


def _check_link(x, errors):
    if not isinstance(x, dict):
        errors.append("link: expected a mapping")
        return
    for key, val in x.items():
        if key == "preset":
            if val not in LINK_PRESETS:
                errors.append(f"link.preset: must be one of {', '.join(LINK_PRESETS)}")
        elif key not in LINK_FIELDS:
            errors.append(f"link.{key}: unknown field")
        elif val is not None and not isinstance(val, (int, float, str, bool)):
            errors.append(f"link.{key}: expected a scalar")


def _check_schemes(x, errors):
    if not isinstance(x, list):
        errors.append("shaping.schemes: expected a list")
        return
    if not x:
        errors.append("shaping.schemes: must not be empty")
    for i, s in enumerate(x):
        path = f"shaping.schemes[{i}]"
        if not isinstance(s, dict):
            errors.append(f"{path}: expected a mapping")
            continue
        for key in s:
            if key not in ("type", "blocklengths", "label"):
                errors.append(f"{path}.{key}: unknown field")
        if "type" not in s:
            errors.append(f"{path}.type: required")
        else:
            _check_value(f"{path}.type", s["type"], ((str,), _choice(SHAPER_TYPES)), errors)
        if s.get("type") != "ideal":
            if "blocklengths" not in s:
                errors.append(f"{path}.blocklengths: required")
            else:
                _check_value(f"{path}.blocklengths", s["blocklengths"], ("list", (int,), _positive), errors)
        if "label" in s:
            _check_value(f"{path}.label", s["label"], ((str,), None), errors)


def validate(raw) -> list:
    """All schema violations of ``raw`` as ``path: message`` strings."""
    errors = []
    if not isinstance(raw, dict):
        return ["(root): expected a mapping"]
    for key in REQUIRED:
        if key not in raw:
            errors.append(f"{key}: required")
    for key, val in raw.items():
        spec = SCHEMA.get(key)
        if spec is None:
            errors.append(f"{key}: unknown field")
        elif spec == "link":
            _check_link(val, errors)
        elif isinstance(spec, dict):
            if not isinstance(val, dict):
                errors.append(f"{key}: expected a mapping")
                continue
            for sub, sval in val.items():
                if sub not in spec:
                    errors.append(f"{key}.{sub}: unknown field")
                elif spec[sub] == "schemes":
                    _check_schemes(sval, errors)
                else:
                    _check_value(f"{key}.{sub}", sval, spec[sub], errors)
        else:
            _check_value(key, val, spec, errors)
    return errors


def _canonical(obj):
    """Sort mapping keys recursively and normalize ints in float positions."""
    if isinstance(obj, dict):
        return {k: _canonical(obj[k]) for k in sorted(obj)}
    if isinstance(obj, list):
        return [_canonical(x) for x in obj]
    return obj


def config_hash(raw: dict) -> str:
    """Hash of the result-determining content; key order and output settings are ignored."""
    body = {k: v for k, v in raw.items() if k not in ("output", "figures")}
    blob = json.dumps(_canonical(body), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_link(spec: dict) -> LinkSystemConfig:
    spec = dict(spec)
    preset = spec.pop("preset", None)
    if preset:
        return LINK_PRESETS[preset](**spec)
    return LinkSystemConfig(**spec)


def from_dict(raw: dict) -> ExperimentConfig:
    errors = validate(raw)
    if errors:
        raise SchemaError(errors)
    raw = copy.deepcopy(raw)
    try:
        link = build_link(raw["link"])
    except (ConfigError, TypeError) as exc:
        raise SchemaError([f"link: {exc}"]) from None
    sh = raw.get("shaping", {})
    sel = raw.get("selection", {})
    sw = raw.get("sweep", {})
    nli = raw.get("nli", {})
    schemes = tuple(
        SchemeSpec(s["type"], tuple(s.get("blocklengths", ())), s.get("label", ""))
        for s in sh.get("schemes", [{"type": "ccdm", "blocklengths": [108]}])
    )
    cfg = ExperimentConfig(
        name=raw["name"],
        kind=raw.get("kind", "ssfm"),
        link=link,
        bits_per_pam=sh.get("bits_per_pam", 4),
        rate=float(sh.get("rate", 2.4)),
        schemes=schemes,
        v=tuple(sel.get("v", [0])),
        d=tuple(sel.get("d", [1])),
        metrics=tuple(sel.get("metric", ["lsas"])),
        lsas_channels=tuple(sel.get("lsas_channels", [-1, 0, 1])),
        lsas_pols=tuple(sel.get("lsas_pols", ["x", "y"])),
        edi_window=sel.get("edi_window", 100),
        joint=sel.get("joint", False),
        sequential=sel.get("sequential", True),
        launch_powers=tuple(float(p) for p in sw.get("launch_power_dbm", [link.launch_power_dbm])),
        seeds=tuple(sw.get("seeds", [1])),
        n_symbols=sw.get("n_symbols", 2**16),
        nli_threshold=float(nli.get("threshold", 1e-4)),
        nli_max_taps=nli.get("max_taps", 4096),
        nli_simplified=nli.get("simplified", False),
        spans=tuple(sw.get("spans", [1, 10, 20, 40])),
        baud_rates=tuple(float(b) for b in sw.get("baud_rates_gbd", [16, 32, 64])),
        nperseg=sw.get("nperseg", 4096),
        figures=tuple(raw.get("figures", [])),
        output_dir=raw.get("output", {}).get("directory", f"results/{raw['name']}"),
        raw=raw,
    )
    errors = []
    for i, s in enumerate(cfg.schemes):
        for j, ell in enumerate(s.blocklengths):
            for d in cfg.d:
                if ell % d:
                    errors.append(f"shaping.schemes[{i}].blocklengths[{j}]: {ell} not divisible by d={d}")
    if 2 * cfg.link.n_pol < max(cfg.d):
        errors.append(f"selection.d: {max(cfg.d)}D mapping needs dual polarization")
    if errors:
        raise SchemaError(errors)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SchemaError([f"(file): not valid YAML: {exc}"]) from None
    return from_dict(raw)


# versioned presets; desk variants are scaled down to run on a workstation
PRESETS = {
    "setup1": {
        "version": 1, "name": "setup1", "kind": "ssfm",
        "link": {"preset": "setup1"},
        "shaping": {"bits_per_pam": 4, "rate": 2.4, "schemes": [
            {"type": "ccdm", "blocklengths": [108, 180, 300, 900]}, {"type": "ideal"}]},
        "selection": {"v": [0, 2], "d": [1], "metric": ["lsas", "edi"]},
        "sweep": {"launch_power_dbm": [-3.5, -2.5, -1.5, -0.5, 0.5], "seeds": [1, 2, 3], "n_symbols": 65536},
        "figures": ["fig9a", "fig9b", "power_sweep"],
    },
    "setup2": {
        "version": 1, "name": "setup2", "kind": "ssfm",
        "link": {"preset": "setup2"},
        "shaping": {"bits_per_pam": 3, "rate": 1.5, "schemes": [
            {"type": "ess", "blocklengths": [108]}, {"type": "kess", "blocklengths": [108]}]},
        "selection": {"v": [0, 2], "d": [4], "metric": ["lsas"]},
        "sweep": {"launch_power_dbm": [6.0, 7.0, 8.0, 9.0, 10.0], "seeds": [1, 2, 3], "n_symbols": 65536},
        "figures": ["fig13", "power_sweep"],
    },
    "setup1-desk": {
        "version": 1, "name": "setup1-desk", "kind": "ssfm",
        "link": {"preset": "setup1", "n_channels": 3, "n_spans": 4},
        "shaping": {"bits_per_pam": 4, "rate": 2.4, "schemes": [{"type": "ccdm", "blocklengths": [108, 300]}]},
        "selection": {"v": [0, 2], "d": [1], "metric": ["lsas"]},
        "sweep": {"launch_power_dbm": [-6.0, -4.0, -2.0], "seeds": [1], "n_symbols": 6000},
        "figures": ["fig9a", "fig9b", "power_sweep"],
    },
    "setup2-desk": {
        "version": 1, "name": "setup2-desk", "kind": "ssfm",
        "link": {"preset": "setup2"},
        "shaping": {"bits_per_pam": 3, "rate": 1.5, "schemes": [
            {"type": "ess", "blocklengths": [108]}, {"type": "kess", "blocklengths": [108]}]},
        "selection": {"v": [0, 2], "d": [4], "metric": ["lsas"]},
        "sweep": {"launch_power_dbm": [6.0, 8.0, 10.0], "seeds": [1], "n_symbols": 8640},
        "figures": ["fig13", "power_sweep"],
    },
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise SchemaError([f"(preset): unknown preset {name!r}; choose from {', '.join(PRESETS)}"])
    return from_dict(copy.deepcopy(PRESETS[name]))
