"""Strict INI run configuration.

Sections: [run], [domain], [carleman], [field], [grid]. Unknown sections or
keys are errors, reported with their line numbers. See docs/config.md.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional

COMMANDS = ("regions", "verify-boundary", "verify-interior", "weight-check", "absorption",
            "uniqueness-demo", "figures")

# key -> (type, default); a default of None means optional, REQUIRED means mandatory
REQUIRED = object()

SCHEMA: Dict[str, Dict[str, tuple]] = {
    "run": {
        "command": ("str", None),
        "seed": ("int", 0),
        "out": ("str", None),
        "workers": ("int", 1),
    },
    "domain": {
        "m": ("int", REQUIRED),
        "n": ("int", REQUIRED),
        "T": ("float", REQUIRED),
        "kind": ("str", REQUIRED),
        "center": ("floats", None),
        "radius": ("float", None),
        "radius_profile": ("floats", None),
        "center_profile": ("profile", None),
        "lo": ("floats", None),
        "hi": ("floats", None),
    },
    "carleman": {
        "p_t": ("floats", None),
        "p_x": ("floats", None),
        "a": ("a", 9.0),
        "delta": ("float", None),
        "b": ("float", None),
        "eps": ("float", None),
        "R": ("float", None),
        "mu": ("float", None),
        "sigma": ("float", None),
        "kappa1": ("float", 0.1),
        "kappa2": ("float", 0.1),
        "separation": ("float", 10.0),
        "C": ("float", None),
        "C_prime": ("float", 1.0),
        "angular_time_sign": ("float", 1.0),
    },
    "field": {
        "families": ("strs", ["bump"]),
        "count": ("int", 20),
        "holdout_count": ("int", 20),
        "calibration_seed": ("int", None),
        "holdout_seed": ("int", None),
        "degree": ("int", 2),
        "variant": ("strs", ["t", "x"]),
        "amplitude": ("floats", None),
        "V": ("float", 1.0),
        "damping": ("floats", [0.0, 4.0, 16.0, 64.0]),
    },
    "grid": {
        "res": ("ints", [32]),
        "n_ang": ("int", None),
        "cap": ("int", 10_000_000),
        "refine": ("bool", True),
        "samples": ("int", 10_000),
        "deltas": ("floats", [0.2, 0.1, 0.05, 0.025]),
        "slices": ("floats", None),
    },
}

SECTIONS_FOR = {
    "regions": ("domain", "carleman"),
    "figures": ("domain", "carleman"),
    "verify-boundary": ("domain", "carleman"),
    "verify-interior": ("domain", "carleman"),
    "weight-check": ("domain", "carleman"),
    "absorption": ("domain", "carleman"),
    "uniqueness-demo": ("domain", "carleman"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    sections: Dict[str, Dict[str, object]]
    text: str = ""
    explicit: Dict[str, set] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.sections[name]

    @property
    def command(self) -> Optional[str]:
        return self.sections["run"]["command"]

    @property
    def seed(self) -> int:
        return int(self.sections["run"]["seed"])

    def canonical(self) -> dict:
        """Parsed values without output location, for hashing and echoing."""
        out = {s: dict(v) for s, v in self.sections.items()}
        out["run"] = {k: v for k, v in out["run"].items() if k not in ("out", "workers")}
        return out

    @property
    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _line_index(text: str):
    """Line numbers of section headers and keys, for diagnostics."""
    where = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]$", s)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip()), no)
    return where


_NUM = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$", re.ASCII)


def _num(raw, where):
    s = raw.strip()
    if not _NUM.match(s):
        raise ConfigError(f"{where}: expected a decimal number, got {raw!r}")
    return float(s)


def _convert(kind, raw, where):
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "int":
        v = _num(raw, where)
        if v != int(v):
            raise ConfigError(f"{where}: expected an integer, got {raw!r}")
        return int(v)
    if kind == "float":
        return _num(raw, where)
    if kind == "a":
        return "auto" if raw == "auto" else _num(raw, where)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{where}: expected true/false, got {raw!r}")
    if kind in ("floats", "ints", "strs"):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{where}: empty list")
        if kind == "strs":
            return parts
        vals = [_num(p, where) for p in parts]
        if kind == "ints":
            if any(v != int(v) for v in vals):
                raise ConfigError(f"{where}: expected integers, got {raw!r}")
            return [int(v) for v in vals]
        return vals
    if kind == "profile":
        comps = [c.strip() for c in raw.split(";")]
        return [_convert("floats", c, where) for c in comps]
    raise AssertionError(kind)


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; defaults are filled in."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#",),
                                   default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        prefix = f"line {line}: " if line else ""
        raise ConfigError(f"{prefix}{exc.message if hasattr(exc, 'message') else exc}") from None
    where = _line_index(text)
    sections: Dict[str, Dict[str, object]] = {}
    explicit: Dict[str, set] = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"line {where.get((name, None), '?')}: unknown section [{name}]")
    for name, schema in SCHEMA.items():
        present = cp.has_section(name)
        vals, seen = {}, set()
        if present:
            for key, raw in cp.items(name):
                loc = f"line {where.get((name, key), '?')}: [{name}] {key}"
                if key not in schema:
                    raise ConfigError(f"{loc}: unknown key {key!r}")
                vals[key] = _convert(schema[key][0], raw, loc)
                seen.add(key)
        for key, (_, default) in schema.items():
            if key not in vals:
                if default is REQUIRED and present:
                    raise ConfigError(f"line {where.get((name, None), '?')}: [{name}] missing required key {key!r}")
                vals[key] = None if default is REQUIRED else (list(default) if isinstance(default, list) else default)
        if present:
            sections[name] = vals
            explicit[name] = seen
        else:
            sections[name] = vals
            explicit[name] = None
    cfg = RunConfig(sections, text, explicit)
    cmd = cfg.sections["run"]["command"]
    if cmd is not None and cmd not in COMMANDS:
        raise ConfigError(f"line {where.get(('run', 'command'), '?')}: [run] command {cmd!r} is not one of {COMMANDS}")
    return cfg


def require(cfg: RunConfig, command: str):
    """Check that the sections needed by ``command`` are present."""
    for name in SECTIONS_FOR[command]:
        if cfg.explicit.get(name) is None:
            raise ConfigError(f"command {command!r} needs a [{name}] section")
    d = cfg["domain"]
    if d["kind"] not in ("ball", "box"):
        raise ConfigError(f"[domain] kind must be 'ball' or 'box', got {d['kind']!r}")
    if d["kind"] == "ball" and d["radius"] is None and d["radius_profile"] is None:
        raise ConfigError("[domain] ball needs radius or radius_profile")
    if d["kind"] == "box" and (d["lo"] is None or d["hi"] is None):
        raise ConfigError("[domain] box needs lo and hi")
    c = cfg["carleman"]
    if c["delta"] is None and (c["b"] is None or c["eps"] is None):
        raise ConfigError("[carleman] needs delta, or both b and eps")
    if c["delta"] is not None and (c["b"] is not None or c["eps"] is not None):
        raise ConfigError("[carleman] give delta or (b, eps), not both")


def load(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
