"""Run configuration: YAML parsing, validation, defaults, provenance.

One config file describes a run; unknown keys fail loudly with the key
name, invariant violations name the field and bound.  Fields left out
are filled from defaults and recorded as such, so every output can state
where each setting came from.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np
import yaml

from .cavity_qed import ALPHA_D52_P32, GAMMA_PD, GAMMA_PS, CavityGeometry, Transition
from .errors import ConfigError, ParameterError
from .geometry import WheelTrapParams
from .trap_model import DriveConfig, IonSpecies


@dataclass
class MeshSettings:
    h_um: float = 75.0
    max_panels: int = 20000


@dataclass
class DriveSettings:
    mode: str = "symmetric"
    v_rf: float = 160.0
    frequency_mhz: float = 35.0  # RF drive frequency Omega_rf / 2pi
    v_pc: float = 1.0
    v_mm: float = 1.0

    def to_drive(self) -> DriveConfig:
        return DriveConfig(
            mode=self.mode,
            v_rf=self.v_rf,
            omega_rf=2.0 * np.pi * self.frequency_mhz * 1e6,
            v_pc=self.v_pc,
            v_mm=self.v_mm,
        )


@dataclass
class ChargeSettings:
    sigma_pc: float = 0.0  # e/um^2
    sigma_mm: float = 0.0


@dataclass
class SpeciesSettings:
    mass_u: float = 40.0
    charge_e: float = 1.0
    probe_wavelength_nm: float = 729.0

    def to_species(self) -> IonSpecies:
        return IonSpecies.from_amu(
            self.mass_u, self.charge_e, self.probe_wavelength_nm * 1e-9
        )


@dataclass
class CavitySettings:
    length_um: float = 507.0
    roc_1_um: float = 318.0
    roc_2_um: float = 312.0
    wavelength_nm: float = 854.0
    transmission_1_ppm: float = 2.0
    transmission_2_ppm: float = 16.0
    other_loss_ppm: float = 50.3  # inferred from finesse, not measured
    gamma_pd_mhz: float = GAMMA_PD / (2.0 * np.pi * 1e6)
    gamma_ps_mhz: float = GAMMA_PS / (2.0 * np.pi * 1e6)
    clebsch_gordan: float = ALPHA_D52_P32

    def to_cavity(self) -> CavityGeometry:
        return CavityGeometry(
            length_um=self.length_um,
            roc_1_um=self.roc_1_um,
            roc_2_um=self.roc_2_um,
            wavelength_nm=self.wavelength_nm,
            transmission_1_ppm=self.transmission_1_ppm,
            transmission_2_ppm=self.transmission_2_ppm,
            other_loss_ppm=self.other_loss_ppm,
        )

    def to_transition(self) -> Transition:
        return Transition(
            wavelength_nm=self.wavelength_nm,
            gamma=2.0 * np.pi * self.gamma_pd_mhz * 1e6,
            alpha=self.clebsch_gordan,
        )


@dataclass
class MapSettings:
    axis: str = "z"
    span_um: float = 100.0
    steps: int = 81


@dataclass
class ChargeSweepSettings:
    mode: str = "frequencies"  # frequencies | compensation
    sigma_start: float = 0.1
    sigma_stop: float = 50.0
    steps: int = 8
    spacing: str = "log"  # log | linear
    omega_target_mhz: float = 1.0  # compensation mode only


@dataclass
class CompensateSettings:
    omega_target_mhz: float = 1.0
    z_target_um: float = 0.0
    lengths_um: list = field(default_factory=list)  # sweep L when non-empty


@dataclass
class ChainSettings:
    n_ions: int = 2
    omega_z_mhz: float = 1.0


@dataclass
class ThermoSettings:
    kind: str = "heating"  # heating | rabi
    input_csv: str = ""
    eta: float = 0.1


_SECTIONS = {
    "geometry": WheelTrapParams,
    "mesh": MeshSettings,
    "drive": DriveSettings,
    "charges": ChargeSettings,
    "species": SpeciesSettings,
    "cavity": CavitySettings,
    "map": MapSettings,
    "charge_sweep": ChargeSweepSettings,
    "compensate": CompensateSettings,
    "chain": ChainSettings,
    "thermo": ThermoSettings,
}

_SCALARS = {"output_dir": "out", "seed": 12345, "workers": 2}


@dataclass
class RunConfig:
    """Validated configuration for one toolkit run."""

    geometry: WheelTrapParams = field(default_factory=WheelTrapParams)
    mesh: MeshSettings = field(default_factory=MeshSettings)
    drive: DriveSettings = field(default_factory=DriveSettings)
    charges: ChargeSettings = field(default_factory=ChargeSettings)
    species: SpeciesSettings = field(default_factory=SpeciesSettings)
    cavity: CavitySettings = field(default_factory=CavitySettings)
    map: MapSettings = field(default_factory=MapSettings)
    charge_sweep: ChargeSweepSettings = field(default_factory=ChargeSweepSettings)
    compensate: CompensateSettings = field(default_factory=CompensateSettings)
    chain: ChainSettings = field(default_factory=ChainSettings)
    thermo: ThermoSettings = field(default_factory=ThermoSettings)
    output_dir: str = "out"
    seed: int = 12345
    workers: int = 2
    provenance: dict = field(default_factory=dict, compare=False)


def _build_section(name: str, cls, data: dict, provenance: dict):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name: f for f in dc_fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key!r}")
        kwargs[key] = value
        provenance[f"{name}.{key}"] = "config"
    for key in known:
        if key not in kwargs:
            provenance[f"{name}.{key}"] = "default"
    try:
        return cls(**kwargs)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config; defaults fill missing fields.

    Raises ConfigError naming any unknown key or violated invariant.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")

    provenance: dict[str, str] = {}
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value, provenance)
        elif key in _SCALARS:
            kwargs[key] = value
            provenance[key] = "config"
        else:
            raise ConfigError(f"unknown key {key!r}")
    for name, cls in _SECTIONS.items():
        if name not in kwargs:
            kwargs[name] = _build_section(name, cls, {}, provenance)
    for name, default in _SCALARS.items():
        if name not in kwargs:
            kwargs[name] = default
            provenance[name] = "default"

    cfg = RunConfig(**kwargs, provenance=provenance)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.mesh.h_um <= 0.0:
        raise ConfigError("mesh.h_um must be positive")
    if cfg.mesh.max_panels < 1:
        raise ConfigError("mesh.max_panels must be at least 1")
    if cfg.drive.mode not in ("rf-gnd", "symmetric"):
        raise ConfigError("drive.mode must be 'rf-gnd' or 'symmetric'")
    if cfg.drive.v_rf <= 0.0:
        raise ConfigError("drive.v_rf must be positive")
    if cfg.drive.frequency_mhz <= 0.0:
        raise ConfigError("drive.frequency_mhz must be positive")
    if cfg.species.mass_u <= 0.0:
        raise ConfigError("species.mass_u must be positive")
    if cfg.species.charge_e == 0.0:
        raise ConfigError("species.charge_e must be nonzero")
    if cfg.map.axis not in ("x", "y", "z"):
        raise ConfigError("map.axis must be one of x, y, z")
    if cfg.map.steps < 2:
        raise ConfigError("map.steps must be at least 2")
    if cfg.charge_sweep.mode not in ("frequencies", "compensation"):
        raise ConfigError("charge_sweep.mode must be 'frequencies' or 'compensation'")
    if cfg.charge_sweep.spacing not in ("log", "linear"):
        raise ConfigError("charge_sweep.spacing must be 'log' or 'linear'")
    if cfg.chain.n_ions < 1 or cfg.chain.n_ions > 20:
        raise ConfigError("chain.n_ions must be in [1, 20]")
    if cfg.thermo.kind not in ("heating", "rabi"):
        raise ConfigError("thermo.kind must be 'heating' or 'rabi'")
    if not isinstance(cfg.seed, int):
        raise ConfigError("seed must be an integer")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    # cross-module invariants checked by their owners (geometry already
    # validated itself during section construction)
    try:
        cfg.drive.to_drive()
        cfg.species.to_species()
        cfg.cavity.to_cavity()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def serialize_config(cfg: RunConfig) -> str:
    """Canonical YAML with every field materialized, sorted keys."""
    out: dict = {}
    for name, cls in _SECTIONS.items():
        section = getattr(cfg, name)
        out[name] = {
            f.name: _plain(getattr(section, f.name))
            for f in dc_fields(cls)
            if f.name != "provenance"
        }
    for name in _SCALARS:
        out[name] = _plain(getattr(cfg, name))
    return yaml.safe_dump(out, sort_keys=True, default_flow_style=False)


def config_hash(cfg: RunConfig) -> str:
    """Stable short hash of the materialized configuration."""
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:12]


def apply_overrides(cfg_text: str, overrides: list[str]) -> str:
    """Apply ``section.key=value`` CLI overrides to raw config text.

    Returns updated YAML text; values are parsed as YAML scalars so
    numbers and booleans keep their types.  The original file is never
    modified.
    """
    data = yaml.safe_load(cfg_text) or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        path, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        keys = path.split(".")
        node = data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {path!r} crosses a scalar")
        node[keys[-1]] = value
    return yaml.safe_dump(data, sort_keys=True)
