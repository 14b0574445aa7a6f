"""Run configuration: an INI-style ``key = value`` file with section headers.

Grammar::

    # comment
    [section]
    key = value     ; inline comment

Sections and keys are case-sensitive and must be among those declared below;
anything else is rejected before any computation starts. Empty values mean
"use the default". See ``configs/benchmark.ini`` for a complete file.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .model import FormFactor, FormFactorKind, ModelParams


@dataclass(frozen=True)
class ModelSection:
    m_V0: float = 12.0
    m_N: float = 10.0
    mu: float = 1.0
    lambda0: float = 0.2
    form_factor: str = "sharp"
    cutoff: float = 5.0


@dataclass(frozen=True)
class GridSection:
    n_modes: int = 1024
    k_max: typing.Optional[float] = None


@dataclass(frozen=True)
class KernelsSection:
    E_min: typing.Optional[float] = None
    E_max: typing.Optional[float] = None
    n_E: int = 2001


@dataclass(frozen=True)
class SectorSection:
    n_points: int = 2000
    fit_start: float = 0.2
    fit_stop: float = 2.0


@dataclass(frozen=True)
class MasterSection:
    n_modes: int = 128
    variant: str = "hermitized"
    initial: str = "V"
    t_max: typing.Optional[float] = None
    n_out: int = 200
    dt: typing.Optional[float] = None
    kappa: typing.Optional[float] = None


@dataclass(frozen=True)
class LangevinSection:
    dt: float = 0.005
    t_max: typing.Optional[float] = None
    n_trajectories: int = 10000
    seed: int = 42
    phi0: float = 1.0
    p: float = 0.0
    stride: int = 40


@dataclass(frozen=True)
class VerifySection:
    stable_m_V0: float = 10.4
    fdt_lambda0: float = 0.4
    fdt_m_V0: float = 14.0
    fdt_trajectories: int = 3000
    recurrence_modes: str = "128,256,512"


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    grid: GridSection = field(default_factory=GridSection)
    kernels: KernelsSection = field(default_factory=KernelsSection)
    sector: SectorSection = field(default_factory=SectorSection)
    master: MasterSection = field(default_factory=MasterSection)
    langevin: LangevinSection = field(default_factory=LangevinSection)
    verify: VerifySection = field(default_factory=VerifySection)
    output: OutputSection = field(default_factory=OutputSection)

    def model_params(self, **overrides) -> ModelParams:
        m = dataclasses.replace(self.model, **overrides)
        ff = FormFactor(FormFactorKind(m.form_factor), m.cutoff)
        return ModelParams(m.m_V0, m.m_N, m.mu, m.lambda0, ff)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; insensitive to file layout."""
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, section: str, **changes) -> "RunConfig":
        return dataclasses.replace(
            self, **{section: dataclasses.replace(getattr(self, section), **changes)})

    @property
    def recurrence_modes(self) -> list[int]:
        return [int(s) for s in self.verify.recurrence_modes.split(",")]


_SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(RunConfig)}


def _coerce(section: str, key: str, raw: str, hint):
    raw = raw.strip()
    optional = typing.get_origin(hint) is typing.Union
    base = [a for a in typing.get_args(hint) if a is not type(None)][0] if optional else hint
    if raw == "":
        if optional:
            return None
        raise ConfigurationError(f"[{section}] {key} needs a value")
    try:
        if base is int:
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        if base is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(
            f"[{section}] {key} = {raw!r} is not a valid {base.__name__}") from None


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(
        inline_comment_prefixes=(";", "#"), interpolation=None, empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    sections = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigurationError(f"unknown section [{name}]")
        cls = _SECTIONS[name]
        hints = typing.get_type_hints(cls)
        values = {}
        for key, raw in parser.items(name):
            if key not in hints:
                raise ConfigurationError(f"unknown key {key!r} in [{name}]")
            values[key] = _coerce(name, key, raw, hints[key])
        sections[name] = cls(**values)
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config` (``None`` becomes an empty value)."""
    lines = []
    for name, section in cfg.as_dict().items():
        lines.append(f"[{name}]")
        for key, value in section.items():
            if value is None:
                lines.append(f"{key} =")
            else:
                lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def validate(cfg: RunConfig) -> None:
    """Everything checkable without running a computation."""
    if cfg.model.form_factor not in {k.value for k in FormFactorKind}:
        raise ConfigurationError(f"form_factor must be 'sharp' or 'lorentzian'")
    cfg.model_params()  # parameter invariants
    if cfg.grid.n_modes < 2 or cfg.master.n_modes < 2:
        raise ConfigurationError("n_modes must be >= 2")
    if cfg.grid.k_max is not None and cfg.grid.k_max <= 0:
        raise ConfigurationError("k_max must be positive")
    if cfg.kernels.n_E < 2:
        raise ConfigurationError("n_E must be >= 2")
    if cfg.master.variant not in ("literal", "hermitized"):
        raise ConfigurationError("master variant must be 'literal' or 'hermitized'")
    if cfg.master.initial not in ("V", "superposition", "mixed"):
        raise ConfigurationError("master initial must be 'V', 'superposition' or 'mixed'")
    if cfg.master.n_out < 1:
        raise ConfigurationError("master n_out must be >= 1")
    for name, val in (("master dt", cfg.master.dt), ("master t_max", cfg.master.t_max),
                      ("langevin t_max", cfg.langevin.t_max)):
        if val is not None and val <= 0:
            raise ConfigurationError(f"{name} must be positive")
    if cfg.langevin.dt <= 0 or cfg.langevin.stride < 1 or cfg.langevin.n_trajectories < 2:
        raise ConfigurationError("langevin needs dt > 0, stride >= 1, n_trajectories >= 2")
    if not 0 <= cfg.langevin.seed < 2**64:
        raise ConfigurationError("seed must fit in 64 bits")
    if not 0 < cfg.sector.fit_start < cfg.sector.fit_stop:
        raise ConfigurationError("sector fit window must satisfy 0 < fit_start < fit_stop")
    try:
        modes = cfg.recurrence_modes
    except ValueError:
        raise ConfigurationError("recurrence_modes must be comma-separated integers") from None
    if len(modes) < 2 or any(m < 2 for m in modes):
        raise ConfigurationError("recurrence_modes needs at least two grids of >= 2 modes")
    if cfg.verify.fdt_trajectories < 2:
        raise ConfigurationError("fdt_trajectories must be >= 2")
