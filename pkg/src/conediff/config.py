"""Run configuration: a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored.  Unknown keys, duplicate keys and
ill-typed values are rejected with the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

__all__ = [
    "ChecksConfig",
    "ConeConfig",
    "ConfigError",
    "FlowConfig",
    "InitConfig",
    "OutputConfig",
    "RunConfig",
    "KEYS",
    "parse_config",
    "load_config",
]


class ConfigError(ValueError):
    """Invalid configuration text; ``line`` is 1-based or ``None``."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ConeConfig:
    theta1: float
    theta2: float


@dataclass(frozen=True)
class InitConfig:
    """Initial curve.

    ``type`` is ``arc`` (tip-centred arc of given ``radius`` or ``area``),
    ``perturbed`` (arc plus cosine ``modes``) or ``file`` (snapshot at
    ``path``).
    """

    type: str
    radius: float | None = None
    area: float | None = None
    modes: tuple = ()  # ((j, eps), ...)
    path: str | None = None


@dataclass(frozen=True)
class FlowConfig:
    """Time stepping.  ``None`` means a default scaled by the initial length ``L0``.

    Defaults: ``dt0 = 1e-6 L0^4``, ``dt_min = 1e-14 L0^4``, ``dt_max = 1e-3 L0^4``,
    ``t_end = 10 L0^4``, ``rho_min = 1e-3 L0``, ``k2_cap = 1e4 (K0 + 4 pi^2 w^2) / L_low``
    with ``L_low`` the length of the equal-area arc.
    """

    m: int = 1
    N: int = 200
    t_end: float | None = None
    dt0: float | None = None
    dt_min: float | None = None
    dt_max: float | None = None
    tol_step: float = 1e-7
    rho_min: float | None = None
    k2_cap: float | None = None
    tol_c: float = 1e-7  # stop when max|k - kbar| * L falls below this
    tol_v: float = 1e-4  # ... and the realised max node speed * L^(2m+1) below this
    dt_stiff_c: float | None = None  # optional cap dt <= c * ds^(2m+2)
    remesh_ratio: float = 1.5
    max_steps: int = 2_000_000


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "conediff_out"
    record_every: int = 1
    snapshot_every: int = 0
    svg_every: int = 0


@dataclass(frozen=True)
class ChecksConfig:
    tol_A: float = 1e-6
    tol_L: float = 1e-9  # per-step allowance for length increase, relative to L0
    tol_omega: float = 1e-6
    tol_mono: float = 1e-8  # allowance for Kosc increase, relative to Kosc(0)
    tol_bounds: float = 1e-2
    enable_bounds: bool = True


@dataclass(frozen=True)
class RunConfig:
    cone: ConeConfig
    init: InitConfig
    flow: FlowConfig = field(default_factory=FlowConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    checks: ChecksConfig = field(default_factory=ChecksConfig)


_SECTIONS = {
    "cone": ConeConfig,
    "init": InitConfig,
    "flow": FlowConfig,
    "output": OutputConfig,
    "checks": ChecksConfig,
}

_INT_KEYS = {"flow.m", "flow.N", "flow.max_steps", "output.record_every", "output.snapshot_every", "output.svg_every"}
_BOOL_KEYS = {"checks.enable_bounds"}
_STR_KEYS = {"init.type", "init.path", "output.dir"}
_MODE_KEYS = {"init.modes"}

KEYS = tuple(f"{sec}.{f.name}" for sec, cls in _SECTIONS.items() for f in fields(cls))
_REQUIRED = ("cone.theta1", "cone.theta2", "init.type")
_INIT_TYPES = ("arc", "perturbed", "file")


def _parse_float(key, text, line):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {text!r}", line) from None
    if math.isnan(v):
        raise ConfigError(f"{key} must not be NaN", line)
    return v


def _parse_value(key, text, line):
    if key in _STR_KEYS:
        if not text:
            raise ConfigError(f"{key} must not be empty", line)
        return text
    if key in _INT_KEYS:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {text!r}", line) from None
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key} expects true or false, got {text!r}", line)
    if key in _MODE_KEYS:
        modes = []
        for item in filter(None, (p.strip() for p in text.split(","))):
            j, sep, eps = item.partition(":")
            if not sep:
                raise ConfigError(f"{key} entries must look like 'j:eps', got {item!r}", line)
            try:
                modes.append((int(j), float(eps)))
            except ValueError:
                raise ConfigError(f"{key} entry {item!r} is not 'integer:number'", line) from None
        return tuple(modes)
    return _parse_float(key, text, line)


def _tokenize(text):
    """Yield ``(line_no, key, raw_value)`` for each assignment."""
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {body!r}", no)
        key = key.strip()
        if not key:
            raise ConfigError("missing key before '='", no)
        yield no, key, value.strip()


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse configuration text into a :class:`RunConfig`.

    ``overrides`` maps dotted keys to raw string values that replace (or add
    to) those in ``text``; they are validated like file entries.

    Raises
    ------
    ConfigError
    """
    values: dict[str, object] = {}
    where: dict[str, int | None] = {}
    for no, key, raw in _tokenize(text):
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", no)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key]})", no)
        values[key] = _parse_value(key, raw, no)
        where[key] = no
    for key, raw in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _parse_value(key, str(raw).strip(), None)
        where[key] = None

    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")

    sections = {}
    for sec, cls in _SECTIONS.items():
        kw = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith(sec + ".")}
        try:
            sections[sec] = cls(**kw)
        except TypeError as exc:  # missing required fields
            raise ConfigError(str(exc)) from None
    cfg = RunConfig(**sections)
    _validate(cfg, where)
    return cfg


def _validate(cfg: RunConfig, where):
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", where.get(key))

    t1, t2 = cfg.cone.theta1, cfg.cone.theta2
    if not (0.0 <= t2 < t1 < math.pi):
        fail("cone.theta1", f"need 0 <= theta2 < theta1 < pi, got theta1={t1}, theta2={t2}")

    init = cfg.init
    if init.type not in _INIT_TYPES:
        fail("init.type", f"must be one of {', '.join(_INIT_TYPES)}, got {init.type!r}")
    if init.type in ("arc", "perturbed"):
        if (init.radius is None) == (init.area is None):
            fail("init.type", "arc initial data needs exactly one of init.radius or init.area")
        for key, v in (("init.radius", init.radius), ("init.area", init.area)):
            if v is not None and not v > 0:
                fail(key, "must be positive")
    if init.type == "perturbed":
        if not init.modes:
            fail("init.type", "perturbed needs init.modes")
        if any(j < 1 for j, _ in init.modes):
            fail("init.modes", "mode numbers must be >= 1")
        if sum(abs(e) for _, e in init.modes) >= 1.0:
            fail("init.modes", "sum of |eps| must be < 1")
    if init.type == "file" and not init.path:
        fail("init.type", "file initial data needs init.path")

    fl = cfg.flow
    if fl.m not in (1, 2):
        fail("flow.m", f"only m = 1 and m = 2 are supported, got {fl.m}")
    if fl.N < 8:
        fail("flow.N", "need at least 8 segments")
    if fl.t_end is not None and not fl.t_end >= 0:
        fail("flow.t_end", "must not be negative")
    for key in ("dt0", "dt_min", "dt_max", "tol_step", "rho_min", "k2_cap", "tol_c", "tol_v", "dt_stiff_c"):
        v = getattr(fl, key)
        if v is not None and not v > 0:
            fail(f"flow.{key}", "must be positive")
    if fl.dt_min is not None and fl.dt_max is not None and fl.dt_min > fl.dt_max:
        fail("flow.dt_min", "must not exceed flow.dt_max")
    if not fl.remesh_ratio > 1.0:
        fail("flow.remesh_ratio", "must exceed 1")
    if fl.max_steps < 1:
        fail("flow.max_steps", "must be positive")

    out = cfg.output
    if out.record_every < 1:
        fail("output.record_every", "must be >= 1")
    for key in ("snapshot_every", "svg_every"):
        if getattr(out, key) < 0:
            fail(f"output.{key}", "must be >= 0")
    for key in ("tol_A", "tol_L", "tol_omega", "tol_mono", "tol_bounds"):
        if not getattr(cfg.checks, key) >= 0:
            fail(f"checks.{key}", "must be non-negative")


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and parse a configuration file.

    A relative ``init.path`` is resolved against the file's directory.
    """
    import os

    with open(path, encoding="utf-8") as fh:
        cfg = parse_config(fh.read(), overrides)
    if cfg.init.path and not os.path.isabs(cfg.init.path):
        base = os.path.dirname(os.path.abspath(path))
        cfg = replace(cfg, init=replace(cfg.init, path=os.path.join(base, cfg.init.path)))
    return cfg
