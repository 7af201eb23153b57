"""Experiment configuration: flat INI files with one section per module.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments.  Pairs and lists are comma separated.  Unknown
sections or keys are rejected, so typos fail loudly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

KINDS = (
    "rotor-echo",
    "rotor-classical",
    "osc-correlation",
    "osc-fgr",
    "osc-ivr",
    "glauber-populations",
)


# ----------------------------------------------------------------- value parsers

def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(_float(part) for part in text.split(","))


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return vals


def _window(text: str):
    if text.strip().lower() in ("auto", ""):
        return "auto"
    lo, hi = _pair(text)
    if hi <= lo:
        raise ValueError("window end must exceed its start")
    return (lo, hi)


def _region(text: str) -> tuple[float, float, float, float]:
    vals = _floats(text)
    if len(vals) != 4:
        raise ValueError("region needs theta_min, theta_max, p_min, p_max")
    return vals


def _choice(*options):
    def parse(text: str) -> str:
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return t
    return parse


def _str(text: str) -> str:
    return text.strip()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "experiment": {
        "kind": (_choice(*KINDS), None),
        "T": (_int, 14),
        "seed": (_int, 0),
        "threads": (_int, 1),
        "out": (_str, ""),
        "figures": (_bool, True),
    },
    "rotor": {
        "N": (_int, 8192),
        "K": (_float, 10.0),
        "sigma": (_float, 1.1),
        "symmetric": (_bool, False),
        "members": (_int, 64),
        "region": (_region, (0.2, 0.3, 0.3, 0.4)),
        "fit_window": (_window, (2.0, 8.0)),
        "peres": (_bool, True),
    },
    "classical": {
        "trajectories": (_int, 100_000),
        "gamma": (_float, 2.0),
        "fit_window": (_window, (1.0, 6.0)),
        "lyapunov_trajectories": (_int, 100),
        "lyapunov_steps": (_int, 1000),
    },
    "oscillator": {
        "omega0": (_float, 1.0),
        "drive": (_choice("kicked", "harmonic", "pulses"), "kicked"),
        "g0": (_float, 1.0),
        "amplitudes": (_floats, ()),
        "phases": (_floats, ()),
        "pulse_width": (_float, 0.01),
        "dt": (_float, 0.01),
        "mixture": (_choice("gaussian", "ring", "thermal"), "gaussian"),
        "center": (_pair, (1.0, 0.0)),
        "width": (_float, 0.1),
        "ring_action": (_float, 1.0),
        "ring_width": (_float, 0.01),
        "temperature": (_float, 1.0),
        "samples": (_int, 100_000),
        "sigmas": (_floats, (2.0, 4.0)),
        "fit_window": (_window, "auto"),
        "fgr_sigma": (_float, 0.05),
        "chi2_window": (_window, "auto"),
        "alpha0": (_pair, (1.0, 0.0)),
        "hbar": (_float, 1e-4),
        "epsilon": (_float, 1e-4),
        "ivr_samples": (_int, 4096),
        "quantum_fluctuations": (_bool, True),
        "early_window": (_window, (1.0, 6.0)),
    },
    "glauber": {
        "weight": (_choice("gaussian", "ring", "thermal", "tabulated"), "thermal"),
        "hbar": (_float, 0.1),
        "width": (_float, 1.0),
        "ring_action": (_float, 0.4),
        "ring_width": (_float, 4e-7),
        "temperature": (_float, 1.0),
        "omega0": (_float, 1.0),
        "anharmonic": (_bool, True),
        "file": (_str, ""),
    },
}

# sections each experiment kind reads
SECTIONS_FOR_KIND = {
    "rotor-echo": ("experiment", "rotor", "classical"),
    "rotor-classical": ("experiment", "rotor", "classical"),
    "osc-correlation": ("experiment", "oscillator"),
    "osc-fgr": ("experiment", "oscillator"),
    "osc-ivr": ("experiment", "oscillator"),
    "glauber-populations": ("experiment", "glauber"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration: the experiment kind plus typed values per section."""

    kind: str
    sections: dict = field(default_factory=dict)
    source: str = ""

    def get(self, section: str, key: str):
        try:
            return self.sections[section][key]
        except KeyError:
            raise ConfigError(f"no value for {section}.{key}", field=f"{section}.{key}") from None

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def to_dict(self) -> dict:
        return {name: dict(values) for name, values in self.sections.items()}

    def to_ini(self) -> str:
        lines = []
        for name, values in self.sections.items():
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {_format(val)}" for key, val in values.items())
            lines.append("")
        return "\n".join(lines)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Override [experiment] entries (seed, threads, out, T, figures)."""
        sections = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in SCHEMA["experiment"]:
                raise ConfigError(f"unknown experiment option {key!r}", field=f"experiment.{key}")
            sections["experiment"][key] = value
        return _validated(sections, self.source)

    @classmethod
    def from_dict(cls, data: dict, source: str = "") -> "ExperimentConfig":
        raw = {sec: {k: (v if isinstance(v, str) else _format(_tupled(v))) for k, v in vals.items()}
               for sec, vals in data.items()}
        return parse_sections(raw, source)


def _tupled(v):
    return tuple(v) if isinstance(v, list) else v


def parse_sections(raw: dict[str, dict[str, str]], source: str = "") -> ExperimentConfig:
    """Parse string-valued sections against the schema and fill defaults."""
    for sec in raw:
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", field=sec)
    if "experiment" not in raw or "kind" not in raw["experiment"]:
        raise ConfigError("missing experiment.kind", field="experiment.kind")
    typed: dict[str, dict] = {}
    for sec, values in raw.items():
        schema = SCHEMA[sec]
        for key in values:
            if key not in schema:
                raise ConfigError(f"unknown key {sec}.{key}", field=f"{sec}.{key}")
        typed[sec] = {}
        for key, (parser, default) in schema.items():
            if key in values:
                try:
                    typed[sec][key] = parser(values[key])
                except ValueError as exc:
                    raise ConfigError(f"{sec}.{key}: {exc}", field=f"{sec}.{key}") from None
            else:
                typed[sec][key] = default
    kind = typed["experiment"]["kind"]
    ordered = {}
    for sec in SECTIONS_FOR_KIND[kind]:
        if sec not in typed:
            typed[sec] = {key: default for key, (_, default) in SCHEMA[sec].items()}
        ordered[sec] = typed[sec]
    return _validated(ordered, source)


def _require(cond: bool, field_name: str, message: str):
    if not cond:
        raise ConfigError(f"{field_name}: {message}", field=field_name)


def _validated(sections: dict, source: str) -> ExperimentConfig:
    exp = sections["experiment"]
    _require(exp["T"] >= 0, "experiment.T", "must be non-negative")
    _require(exp["threads"] >= 1, "experiment.threads", "must be at least 1")
    _require(exp["seed"] >= 0, "experiment.seed", "must be non-negative")
    if "rotor" in sections:
        r = sections["rotor"]
        _require(r["N"] >= 2, "rotor.N", "must be at least 2")
        _require(r["members"] >= 1, "rotor.members", "must be at least 1")
        th0, th1, p0, p1 = r["region"]
        _require(0.0 <= th0 < th1 <= 1.0 and -0.5 <= p0 < p1 <= 0.5, "rotor.region",
                 "needs 0 <= theta_min < theta_max <= 1 and -0.5 <= p_min < p_max <= 0.5")
    if "classical" in sections:
        c = sections["classical"]
        _require(c["trajectories"] >= 0, "classical.trajectories", "must be non-negative")
        _require(c["lyapunov_steps"] >= 1, "classical.lyapunov_steps", "must be at least 1")
    if "oscillator" in sections:
        o = sections["oscillator"]
        _require(o["dt"] > 0, "oscillator.dt", "must be positive")
        _require(o["samples"] >= 1, "oscillator.samples", "must be at least 1")
        _require(o["width"] > 0, "oscillator.width", "must be positive")
        _require(o["hbar"] > 0, "oscillator.hbar", "must be positive")
        _require(o["temperature"] > 0, "oscillator.temperature", "must be positive")
        if o["drive"] == "harmonic":
            _require(len(o["amplitudes"]) > 0, "oscillator.amplitudes", "harmonic drive needs amplitudes")
            _require(len(o["phases"]) in (0, len(o["amplitudes"])), "oscillator.phases",
                     "must match the number of amplitudes")
        if exp["kind"] == "osc-fgr" and o["chi2_window"] != "auto":
            lo, hi = o["chi2_window"]
            _require(hi <= exp["T"] and math.floor(hi) - math.ceil(lo) >= 1, "oscillator.chi2_window",
                     f"must lie within [0, T={exp['T']}] and contain two integer times")
    if "glauber" in sections:
        g = sections["glauber"]
        _require(g["hbar"] > 0, "glauber.hbar", "must be positive")
        _require(g["temperature"] > 0, "glauber.temperature", "must be positive")
        if g["weight"] == "tabulated":
            _require(bool(g["file"]), "glauber.file", "tabulated weight needs a file")
    return ExperimentConfig(sections["experiment"]["kind"], sections, source)


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str  # keys are case sensitive (N, K, T)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from None
    raw = {sec: dict(parser[sec]) for sec in parser.sections()}
    return parse_sections(raw, source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", field="config") from None
    return parse_config(text, str(path))


def preset_names() -> list[str]:
    folder = resources.files("echolab") / "presets"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> ExperimentConfig:
    item = resources.files("echolab") / "presets" / f"{name}.ini"
    if not item.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}", field="preset")
    return parse_config(item.read_text(encoding="utf-8"), f"preset:{name}")
