"""Run configuration: a YAML file with fixed sections and keys.

Grammar (every key optional, unknown keys are errors)::

    model:      {geometry: chain|torus, sites: 6 | [rows, cols], jz: 1.0, jx: 5.0}
    schedule:   {kind: linear|polynomial, coefficients: [c0, c1, ...]}
    band:       {mode: lowest-k|energy-window, k: 1, window: [lo, hi] | null,
                 degeneracy_tol: null | float, sector: auto | null | {Z: 1, X: 1}}
    optimize:   {approaches: [none, delta-norm, g-tilde], bounds: null | [lo, hi],
                 points: 21, rounds: 3, translation_invariant: true}
    evolution:  {stepper: trotter2|exact-step, dt: 0.01, dt_max: 0.01}
    sweep:      {tau_min: 1.0, tau_max: 300.0, tau_points: 30, taus: null | [..],
                 ratios: null | [..], seed: 0}
    run:        {output_dir: out, threads: 1, approach: null, tau: null,
                 diagnostics: false}

Energies are in units of Jz and times in units of 1/Jz (hbar = 1).
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import yaml

from .exceptions import ConfigError
from .experiment import SweepConfig, geometric_taus
from .hamiltonians import LatticeSpec, Schedule
from .optimize import APPROACHES, OptimizeSpec
from .spectral import BandSelector

_NUM = (int, float)

DEFAULTS = {
    "model": {"geometry": "chain", "sites": 6, "jz": 1.0, "jx": 5.0},
    "schedule": {"kind": "linear", "coefficients": []},
    "band": {"mode": "lowest-k", "k": 1, "window": None, "degeneracy_tol": None, "sector": "auto"},
    "optimize": {
        "approaches": list(APPROACHES),
        "bounds": None,
        "points": 21,
        "rounds": 3,
        "translation_invariant": True,
    },
    "evolution": {"stepper": "trotter2", "dt": 0.01, "dt_max": 0.01},
    "sweep": {"tau_min": 1.0, "tau_max": 300.0, "tau_points": 30, "taus": None, "ratios": None, "seed": 0},
    "run": {"output_dir": "out", "threads": 1, "approach": None, "tau": None, "diagnostics": False},
}


def _is_num(v):
    return isinstance(v, _NUM) and not isinstance(v, bool)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _num_list(v, length=None):
    return isinstance(v, list) and all(_is_num(x) for x in v) and (length is None or len(v) == length)


# key -> (predicate, description)
CHECKS = {
    ("model", "geometry"): (lambda v: v in ("chain", "torus"), "'chain' or 'torus'"),
    ("model", "sites"): (lambda v: _is_int(v) or (isinstance(v, list) and len(v) == 2 and all(_is_int(x) for x in v)),
                         "an integer or [rows, cols]"),
    ("model", "jz"): (_is_num, "a number"),
    ("model", "jx"): (_is_num, "a number"),
    ("schedule", "kind"): (lambda v: v in ("linear", "polynomial"), "'linear' or 'polynomial'"),
    ("schedule", "coefficients"): (_num_list, "a list of numbers"),
    ("band", "mode"): (lambda v: v in ("lowest-k", "energy-window"), "'lowest-k' or 'energy-window'"),
    ("band", "k"): (_is_int, "an integer"),
    ("band", "window"): (lambda v: v is None or _num_list(v, 2), "null or [low, high]"),
    ("band", "degeneracy_tol"): (lambda v: v is None or _is_num(v), "null or a number"),
    ("band", "sector"): (lambda v: v is None or v == "auto" or (isinstance(v, dict) and all(_is_int(x) for x in v.values())),
                         "'auto', null or a mapping like {Z: 1, X: 1}"),
    ("optimize", "approaches"): (lambda v: isinstance(v, list) and len(v) > 0 and all(a in APPROACHES for a in v),
                                 f"a non-empty list drawn from {list(APPROACHES)}"),
    ("optimize", "bounds"): (lambda v: v is None or _num_list(v, 2), "null or [low, high]"),
    ("optimize", "points"): (_is_int, "an integer"),
    ("optimize", "rounds"): (_is_int, "an integer"),
    ("optimize", "translation_invariant"): (lambda v: isinstance(v, bool), "true or false"),
    ("evolution", "stepper"): (lambda v: v in ("trotter2", "exact-step"), "'trotter2' or 'exact-step'"),
    ("evolution", "dt"): (_is_num, "a number"),
    ("evolution", "dt_max"): (_is_num, "a number"),
    ("sweep", "tau_min"): (_is_num, "a number"),
    ("sweep", "tau_max"): (_is_num, "a number"),
    ("sweep", "tau_points"): (_is_int, "an integer"),
    ("sweep", "taus"): (lambda v: v is None or _num_list(v), "null or a list of numbers"),
    ("sweep", "ratios"): (lambda v: v is None or _num_list(v), "null or a list of numbers"),
    ("sweep", "seed"): (_is_int, "an integer"),
    ("run", "output_dir"): (lambda v: isinstance(v, str) and v != "", "a non-empty path"),
    ("run", "threads"): (lambda v: _is_int(v) and v >= 1, "a positive integer"),
    ("run", "approach"): (lambda v: v is None or v in APPROACHES, f"null or one of {list(APPROACHES)}"),
    ("run", "tau"): (lambda v: v is None or (_is_num(v) and v >= 0), "null or a non-negative number"),
    ("run", "diagnostics"): (lambda v: isinstance(v, bool), "true or false"),
}


def _key_lines(node, prefix=(), out=None):
    """Map key paths to 1-based line numbers using the YAML node tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (str(key_node.value),)
            out[path] = key_node.start_mark.line + 1
            _key_lines(value_node, path, out)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``data`` mirrors the YAML sections."""

    data: dict
    source: str = "<defaults>"

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    def __getitem__(self, section):
        return self.data[section]

    def lattice(self) -> LatticeSpec:
        m = self.data["model"]
        sites = tuple(m["sites"]) if isinstance(m["sites"], list) else m["sites"]
        return LatticeSpec(m["geometry"], sites, m["jz"], m["jx"])

    def schedule(self) -> Schedule:
        s = self.data["schedule"]
        return Schedule() if s["kind"] == "linear" else Schedule.polynomial(s["coefficients"])

    def band(self) -> BandSelector:
        b = self.data["band"]
        window = tuple(b["window"]) if b["window"] is not None else None
        return BandSelector(b["mode"], b["k"], window, b["degeneracy_tol"], b["sector"])

    def search(self, approach=None) -> OptimizeSpec:
        o = self.data["optimize"]
        bounds = tuple(o["bounds"]) if o["bounds"] is not None else None
        return OptimizeSpec(approach or o["approaches"][0], bounds, o["points"], o["rounds"],
                            o["translation_invariant"])

    def tau_grid(self):
        s = self.data["sweep"]
        if s["taus"] is not None:
            return tuple(float(t) for t in s["taus"])
        return geometric_taus(s["tau_min"], s["tau_max"], s["tau_points"])

    def sweep_config(self) -> SweepConfig:
        e = self.data["evolution"]
        return SweepConfig(
            model=self.lattice(),
            schedule=self.schedule(),
            approaches=tuple(self.data["optimize"]["approaches"]),
            tau_grid=self.tau_grid(),
            band=self.band(),
            stepper=e["stepper"],
            dt=float(e["dt"]),
            dt_max=float(e["dt_max"]),
            search=self.search(),
            seed=self.data["sweep"]["seed"],
            n_jobs=self.data["run"]["threads"],
        )

    def with_overrides(self, **flags) -> "RunConfig":
        data = copy.deepcopy(self.data)
        for key, value in flags.items():
            if value is None:
                continue
            section, name = {"output_dir": ("run", "output_dir"), "threads": ("run", "threads"),
                             "seed": ("sweep", "seed"), "approach": ("run", "approach"),
                             "tau": ("run", "tau")}[key]
            data[section][name] = value
        return validate(data, {}, self.source)

    def dump(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False, default_flow_style=None)


def validate(raw, lines: dict, source: str = "<config>") -> RunConfig:
    def fail(path, msg):
        line = lines.get(path)
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: {'.'.join(path)}: {msg}")

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping of sections")
    data = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in DEFAULTS:
            fail((str(section),), f"unknown section (expected one of {list(DEFAULTS)})")
        if body is None:
            continue
        if not isinstance(body, dict):
            fail((section,), "section must be a mapping")
        for key, value in body.items():
            path = (section, str(key))
            if key not in DEFAULTS[section]:
                fail(path, f"unknown key (expected one of {list(DEFAULTS[section])})")
            ok, desc = CHECKS[path]
            if not ok(value):
                fail(path, f"expected {desc}, got {value!r}")
            if isinstance(value, float) or (_is_num(value) and isinstance(DEFAULTS[section][key], float)):
                value = float(value)
            data[section][key] = value
    if isinstance(data["band"]["sector"], dict):
        data["band"]["sector"] = {str(k).upper(): int(v) for k, v in data["band"]["sector"].items()}

    # semantic checks, each reported against the key that owns it
    builders = [
        (("model",), lambda d: RunConfig(d).lattice()),
        (("schedule",), lambda d: RunConfig(d).schedule()),
        (("band",), lambda d: RunConfig(d).band()),
        (("optimize",), lambda d: RunConfig(d).search()),
        (("sweep",), lambda d: RunConfig(d).tau_grid()),
        (("evolution",), lambda d: RunConfig(d).sweep_config()),
    ]
    for path, build in builders:
        try:
            build(data)
        except (ValueError, TypeError) as exc:
            fail(path, str(exc))
    return RunConfig(data, source)


def loads(text: str, source: str = "<config>") -> RunConfig:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from exc
    return validate(raw, _key_lines(node) if node is not None else {}, source)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    return loads(text, str(path))


def default() -> RunConfig:
    return validate({}, {}, "<defaults>")
