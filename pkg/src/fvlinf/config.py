"""Run configuration: an INI-style file with fixed sections, validated up front.

Example::

    [mesh]
    nx = 16
    ny = 16
    dirichlet = west, east

    [scheme]
    kind = scharfetter_gummel

    [problem]
    preset = laplace-linear

    [degiorgi]
    seed = 42
    refinements = 8x8, 16x16, 32x32

A JSON object with the same sections is accepted as well, which is how the
manifest of a previous run is replayed.
"""
from __future__ import annotations

import configparser
import importlib
import json
from dataclasses import dataclass
from pathlib import Path

from .bfunctions import CENTERED, CUSTOM, SCHARFETTER_GUMMEL, UPWIND, BFunction, custom_b, get_b
from .presets import ALL_SIDES, PRESETS

SCHEME_KINDS = (UPWIND, SCHARFETTER_GUMMEL, CENTERED, CUSTOM)
RANDOM_STUDY = "random-compliant"


class ConfigError(ValueError):
    pass


def _int(v):
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, float) and not v.is_integer():
        raise ValueError("expected an integer")
    return int(v)


def _float(v):
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _str(v):
    return str(v).strip()


def _list(v):
    if isinstance(v, (list, tuple)):
        return [str(s).strip() for s in v]
    return [s.strip() for s in str(v).split(",") if s.strip()]


def _floats(v):
    return [float(s) for s in _list(v)]


def _grids(v):
    out = []
    for item in (v if isinstance(v, (list, tuple)) else _list(v)):
        if isinstance(item, (list, tuple)):
            nx, ny = item
        else:
            nx, _, ny = str(item).lower().partition("x")
        out.append([int(nx), int(ny or nx)])
    return out


# section -> key -> (parser, default)
SCHEMA = {
    "mesh": {"nx": (_int, None), "ny": (_int, None), "rect": (_floats, [0.0, 1.0, 0.0, 1.0]),
             "dirichlet": (_list, list(ALL_SIDES)), "file": (_str, None)},
    "scheme": {"kind": (_str, UPWIND), "hook": (_str, None), "quadrature_order": (_int, 3)},
    "problem": {"preset": (_str, None), "velocity_x": (_str, None), "velocity_y": (_str, None),
                "reaction": (_str, None), "source": (_str, None), "dirichlet": (_str, None)},
    "solver": {"tol": (_float, 1e-12), "reorder": (_bool, False)},
    "degiorgi": {"m_max": (_int, 12), "seed": (_int, 42), "trials": (_int, 50), "grid": (_int, 16),
                 "u_max": (_float, 2.0), "f_max": (_float, 1.0), "eta": (_float, 1.0),
                 "poincare_C": (_float, 1.0), "boundM_C": (_float, 1.0), "safety": (_float, 2.0),
                 "max_change": (_float, 0.10), "lemma_trials": (_int, 100),
                 "refinements": (_grids, [])},
    "calibrate": {"studies": (_list, [RANDOM_STUDY]), "refinements": (_grids, [[8, 8], [16, 16]]),
                  "m_max": (_int, 12), "trials": (_int, 5), "u_max": (_float, 2.0),
                  "f_max": (_float, 50.0)},
    "output": {"dir": (_str, "out"), "dump_system": (_bool, False)},
}
EXPRESSION_KEYS = ("velocity_x", "velocity_y", "reaction", "source", "dirichlet")


@dataclass
class RunConfig:
    """Validated configuration; ``values[section][key]`` holds parsed values."""
    values: dict

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping of sections")
        values = {}
        for section in raw:
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]; known: {sorted(SCHEMA)}")
        for section, keys in SCHEMA.items():
            given = raw.get(section) or {}
            if not isinstance(given, dict):
                raise ConfigError(f"section [{section}] must be a mapping")
            for key in given:
                if key not in keys:
                    raise ConfigError(f"unknown key {key!r} in [{section}]; known: {sorted(keys)}")
            sec = {}
            for key, (parse, default) in keys.items():
                v = given.get(key)
                if v is None or (isinstance(v, str) and not v.strip() and default is None):
                    sec[key] = default
                    continue
                try:
                    sec[key] = parse(v)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"[{section}] {key} = {v!r}: {exc}") from None
            values[section] = sec
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        stripped = text.lstrip()
        if stripped.startswith("{"):
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON config: {exc}") from None
            raw = raw.get("config", raw) if "config" in raw and "mesh" not in raw else raw
            return cls.from_dict(raw)
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str  # keys are case-sensitive (poincare_C)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        return cls.from_dict({s: dict(cp[s]) for s in cp.sections()})

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    @classmethod
    def default(cls) -> "RunConfig":
        return cls.from_dict({})

    def validate(self) -> None:
        m, s, p, sv, d, c = (self.values[k] for k in ("mesh", "scheme", "problem", "solver", "degiorgi",
                                                       "calibrate"))
        for key in ("nx", "ny"):
            if m[key] is not None and m[key] < 1:
                raise ConfigError(f"[mesh] {key} must be >= 1")
        if len(m["rect"]) != 4 or not (m["rect"][0] < m["rect"][1] and m["rect"][2] < m["rect"][3]):
            raise ConfigError("[mesh] rect must be x0, x1, y0, y1 with x0 < x1 and y0 < y1")
        bad = [side for side in m["dirichlet"] if side not in ALL_SIDES + ("all",)]
        if bad or not m["dirichlet"]:
            raise ConfigError(f"[mesh] dirichlet must list sides from {ALL_SIDES} or 'all', got {m['dirichlet']}")
        if s["kind"] not in SCHEME_KINDS:
            raise ConfigError(f"[scheme] kind {s['kind']!r} is not one of {SCHEME_KINDS}")
        if s["kind"] == CUSTOM and not s["hook"]:
            raise ConfigError("[scheme] kind = custom needs a hook")
        if s["kind"] != CUSTOM and s["hook"]:
            raise ConfigError("[scheme] hook is only meaningful with kind = custom")
        if s["quadrature_order"] < 1:
            raise ConfigError("[scheme] quadrature_order must be >= 1")
        has_expr = any(p[k] is not None for k in EXPRESSION_KEYS)
        if p["preset"] is not None:
            if p["preset"] not in PRESETS:
                raise ConfigError(f"[problem] unknown preset {p['preset']!r}; known: {sorted(PRESETS)}")
            if has_expr:
                raise ConfigError("[problem] give either a preset or field expressions, not both")
        if not sv["tol"] > 0:
            raise ConfigError("[solver] tol must be positive")
        for key in ("m_max", "trials", "grid", "lemma_trials"):
            if d[key] < 1 and key != "trials":
                raise ConfigError(f"[degiorgi] {key} must be >= 1")
        if d["trials"] < 0 or d["seed"] < 0 or d["seed"] >= 2 ** 64:
            raise ConfigError("[degiorgi] trials must be >= 0 and seed a u64")
        for key in ("eta", "poincare_C", "boundM_C", "safety", "max_change", "u_max", "f_max"):
            if not d[key] > 0:
                raise ConfigError(f"[degiorgi] {key} must be positive")
        for section, grids in (("degiorgi", d["refinements"]), ("calibrate", c["refinements"])):
            if any(nx < 1 or ny < 1 for nx, ny in grids):
                raise ConfigError(f"[{section}] refinements must be positive grid sizes")
        if d["refinements"] and m["file"]:
            raise ConfigError("[degiorgi] refinements need a generated mesh, not [mesh] file")
        known = set(PRESETS) | {RANDOM_STUDY}
        if not c["studies"]:
            raise ConfigError("[calibrate] studies must not be empty")
        for study in c["studies"]:
            if study not in known:
                raise ConfigError(f"[calibrate] unknown study {study!r}; known: {sorted(known)}")
        if c["m_max"] < 2:
            raise ConfigError("[calibrate] m_max must be >= 2")
        if c["trials"] < 1 or not (c["u_max"] > 0 and c["f_max"] > 0):
            raise ConfigError("[calibrate] trials must be >= 1 and u_max, f_max positive")

    # -- derived -----------------------------------------------------------
    def b_function(self) -> BFunction:
        s = self.values["scheme"]
        if s["kind"] != CUSTOM:
            return get_b(s["kind"])
        hook = s["hook"]
        if ":" in hook:
            mod, _, attr = hook.partition(":")
            try:
                obj = getattr(importlib.import_module(mod), attr)
            except (ImportError, AttributeError) as exc:
                raise ConfigError(f"[scheme] cannot load hook {hook!r}: {exc}") from None
            return obj if isinstance(obj, BFunction) else custom_b(obj, hook)
        try:
            return get_b(hook)
        except KeyError as exc:
            raise ConfigError(f"[scheme] {exc.args[0]}") from None

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        raw = self.to_dict()
        raw["degiorgi"]["seed"] = seed
        return RunConfig.from_dict(raw)

    def with_output(self, out: str | None) -> "RunConfig":
        if out is None:
            return self
        raw = self.to_dict()
        raw["output"]["dir"] = str(out)
        return RunConfig.from_dict(raw)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.values))

    def to_ini(self) -> str:
        lines = []
        for section, sec in self.values.items():
            lines.append(f"[{section}]")
            for key, v in sec.items():
                if v is None:
                    continue
                if key == "refinements":
                    v = ", ".join(f"{nx}x{ny}" for nx, ny in v)
                elif isinstance(v, list):
                    v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
                elif isinstance(v, float):
                    v = repr(v)
                lines.append(f"{key} = {v}")
            lines.append("")
        return "\n".join(lines)
