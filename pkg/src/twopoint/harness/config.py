"""Run configuration: an INI file with four sections.

Grammar (all keys optional, defaults shown in ``DEFAULTS``)::

    [space]
    generator = interval | cantor | random | two-point | file
    m = 257              # interval grid size
    level = 6            # Cantor level
    n = 50               # random cloud size
    dim = 2              # random cloud dimension
    seed = 0             # random cloud seed
    path =               # input file for generator = file
    format = distance-matrix | point-cloud
    header = false

    [construction]
    kind = st_delta | st_d
    theta = 1
    rho = 0.5
    delta = 9
    n_min = 1
    n_max = 8
    chain = greedy | exact | structured

    [analyses]
    metric = true
    spectrum = true
    sweep =              # "lo, hi" window; empty disables
    points_per_octave = 16
    zeta =               # comma-separated s values
    dixmier =            # comma-separated function names (user-table:PATH allowed)
    dixmier_lambda = 1024
    interval_example = false
    interval_n_max = 20

    [output]
    dir = twopoint-out
    format = csv | tsv

Unknown sections or keys are errors; every error names its ``section.key``.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Iterable, Mapping, Optional

from twopoint.errors import ConfigError

GENERATORS = ("interval", "cantor", "random", "two-point", "file")
FORMATS = ("distance-matrix", "point-cloud")
KINDS = ("st_d", "st_delta")
CHAINS = ("greedy", "exact", "structured")
OUT_FORMATS = ("csv", "tsv")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class SpaceConfig:
    generator: str = "interval"
    m: int = 257
    level: int = 6
    n: int = 50
    dim: int = 2
    seed: int = 0
    path: str = ""
    format: str = "distance-matrix"
    header: bool = False


@dataclass(frozen=True)
class ConstructionConfig:
    kind: str = "st_delta"
    theta: float = 1.0
    rho: float = 0.5
    delta: float = 9.0
    n_min: int = 1
    n_max: int = 8
    chain: str = "greedy"


@dataclass(frozen=True)
class AnalysesConfig:
    metric: bool = True
    spectrum: bool = True
    sweep: tuple[float, ...] = ()
    points_per_octave: int = 16
    zeta: tuple[float, ...] = ()
    dixmier: tuple[str, ...] = ()
    dixmier_lambda: float = 1024.0
    interval_example: bool = False
    interval_n_max: int = 20


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "twopoint-out"
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    space: SpaceConfig = field(default_factory=SpaceConfig)
    construction: ConstructionConfig = field(default_factory=ConstructionConfig)
    analyses: AnalysesConfig = field(default_factory=AnalysesConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


SECTIONS = {"space": SpaceConfig, "construction": ConstructionConfig,
            "analyses": AnalysesConfig, "output": OutputConfig}

_PARSERS: dict[str, Callable[[str], Any]] = {
    "int": int, "float": float, "str": str.strip, "bool": _bool,
    "tuple[float, ...]": _floats, "tuple[str, ...]": _names,
}


def _parse_value(section: str, key: str, type_name: str, text: str):
    try:
        return _PARSERS[type_name](text)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}", f"cannot parse {text!r}: {exc}") from None


def _check(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def validate(cfg: RunConfig) -> RunConfig:
    s, c, a, o = cfg.space, cfg.construction, cfg.analyses, cfg.output
    _check(s.generator in GENERATORS, "space.generator", f"must be one of {GENERATORS}")
    _check(s.m >= 2, "space.m", "must be >= 2")
    _check(0 <= s.level <= 15, "space.level", "must be in [0, 15]")
    _check(s.n >= 1, "space.n", "must be >= 1")
    _check(s.dim >= 1, "space.dim", "must be >= 1")
    _check(s.format in FORMATS, "space.format", f"must be one of {FORMATS}")
    _check(s.generator != "file" or bool(s.path), "space.path", "required for generator = file")
    _check(c.kind in KINDS, "construction.kind", f"must be one of {KINDS}")
    _check(c.theta > 0, "construction.theta", "must be > 0")
    _check(0 < c.rho < 1, "construction.rho", "must be in (0, 1)")
    _check(c.delta > 0, "construction.delta", "must be > 0")
    _check(c.n_min >= 1, "construction.n_min", "must be >= 1")
    _check(c.n_max >= 1, "construction.n_max", "must be >= 1")
    _check(c.chain in CHAINS, "construction.chain", f"must be one of {CHAINS}")
    if a.sweep:
        _check(len(a.sweep) == 2 and 0 < a.sweep[0] < a.sweep[1], "analyses.sweep",
               "must be 'lo, hi' with 0 < lo < hi")
    _check(a.points_per_octave >= 8, "analyses.points_per_octave", "must be >= 8")
    _check(all(x > 0 for x in a.zeta), "analyses.zeta", "all s values must be > 0")
    _check(a.dixmier_lambda > 1, "analyses.dixmier_lambda", "must be > 1")
    _check(6 <= a.interval_n_max <= 30, "analyses.interval_n_max", "must be in [6, 30]")
    _check(o.format in OUT_FORMATS, "output.format", f"must be one of {OUT_FORMATS}")
    _check(bool(o.dir), "output.dir", "must not be empty")
    return cfg


def _section_from_items(name: str, items: Iterable[tuple[str, str]], base):
    cls = SECTIONS[name]
    types = {f.name: f.type for f in fields(cls)}
    updates = {}
    for key, text in items:
        if key not in types:
            raise ConfigError(f"{name}.{key}", "unknown key")
        updates[key] = _parse_value(name, key, types[key], text)
    return replace(base, **updates)


def parse_config(text: str, overrides: Iterable[str] = ()) -> RunConfig:
    """Parse INI text, then apply ``section.key=value`` overrides, then validate."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    cfg = RunConfig()
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(name, "unknown section")
        cfg = replace(cfg, **{name: _section_from_items(name, cp.items(name),
                                                        getattr(cfg, name))})
    return apply_overrides(cfg, overrides)


def apply_overrides(cfg: RunConfig, overrides: Iterable[str]) -> RunConfig:
    for item in overrides:
        path, sep, value = item.partition("=")
        section, dot, key = path.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(path.strip() or item, "override must look like section.key=value")
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
        cfg = replace(cfg, **{section: _section_from_items(
            section, [(key.strip(), value)], getattr(cfg, section))})
    return validate(cfg)


def load_config(path: str, overrides: Iterable[str] = ()) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)


def serialize(cfg: RunConfig) -> str:
    """Canonical text form: every section and key, in declaration order."""
    out = io.StringIO()
    for name in SECTIONS:
        section = getattr(cfg, name)
        out.write(f"[{name}]\n")
        for f in fields(section):
            out.write(f"{f.name} = {_fmt(getattr(section, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode("utf-8")).hexdigest()


def as_dict(cfg: RunConfig) -> Mapping[str, Mapping[str, Any]]:
    return {name: {f.name: getattr(getattr(cfg, name), f.name)
                   for f in fields(getattr(cfg, name))} for name in SECTIONS}


def with_seed(cfg: RunConfig, seed: Optional[int]) -> RunConfig:
    if seed is None:
        return cfg
    return validate(replace(cfg, space=replace(cfg.space, seed=int(seed))))
