"""Device parameters, configuration files and microscopic-to-coupling maps.

Every energy, coupling, detuning and rate is an ordinary frequency in Hz
(E/h). Fields are in tesla. Nothing downstream ever multiplies by hbar.

Configuration documents are INI-style files with the sections
``[erbium]``, ``[magnet]`` (optional), ``[cavities]``, ``[fields]`` and
``[sample]`` (optional). See ``CONFIG_KEYS`` for the accepted keys.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from scipy import constants as _sc

from .errors import ConfigError, ValidationError

MU_B_OVER_H = _sc.physical_constants["Bohr magneton in Hz/T"][0]

CONFIG_DIR_ENV = "MAGTRANS_CONFIG_DIR"
DEFAULT_DELTA_CAP = 10e9
# Printed in one table as 6e37; the text and the YIG cell count give 6e17.
CANONICAL_N_FE = 6e17
_N_FE_TYPO = 6e37


@dataclass(frozen=True)
class PhysicalConstants:
    bohr_magneton_over_h: float = MU_B_OVER_H  # Hz/T
    planck_h: float = _sc.h  # J s, unit bookkeeping only


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}", key=name)


def _require_positive(name, value):
    _require_finite(name, value)
    if value <= 0:
        raise ValidationError(f"{name} must be positive, got {value!r}", key=name)


def _require_non_negative(name, value):
    _require_finite(name, value)
    if value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value!r}", key=name)


@dataclass(frozen=True)
class ErbiumParams:
    """Single-ion erbium parameters; couplings are per ion."""

    n_er: float
    g_ground: float
    g_excited: float
    beta_minus: float
    g_a: float
    g_b: float
    rabi_pump: float
    sigma_spin: float
    sigma_optical: float
    delta_e_zero_field: Optional[float] = None

    def __post_init__(self):
        if not self.n_er >= 1:
            raise ValidationError(f"n_er must be >= 1, got {self.n_er!r}", key="n_er")
        _require_positive("g_g", self.g_ground)
        _require_positive("g_e", self.g_excited)
        _require_positive("sigma_b", self.sigma_spin)
        _require_positive("sigma_a", self.sigma_optical)
        for name in ("beta_minus", "g_a", "g_b", "rabi_pump"):
            _require_finite(name, getattr(self, name))


@dataclass(frozen=True)
class MagnetParams:
    """Magnet host parameters. ``gyromagnetic_ratio`` defaults to g_s * mu_B/h."""

    n_fe: float
    g_s: float
    coordination_z: float
    j_perp: float
    j_par: float
    saturation_magnetization: float
    g_b_tilde: float
    sigma_magnon: float
    gyromagnetic_ratio: Optional[float] = None
    dmi_dz: float = 0.0

    def __post_init__(self):
        if not self.n_fe >= 1:
            raise ValidationError(f"n_fe must be >= 1, got {self.n_fe!r}", key="n_fe")
        _require_positive("g_s", self.g_s)
        _require_non_negative("z", self.coordination_z)
        _require_non_negative("m_s", self.saturation_magnetization)
        _require_positive("sigma_b_tilde", self.sigma_magnon)
        for name in ("j_perp", "j_par", "g_b_tilde", "dmi_dz"):
            _require_finite(name, getattr(self, name))
        if self.gyromagnetic_ratio is None:
            object.__setattr__(self, "gyromagnetic_ratio", self.g_s * MU_B_OVER_H)
        _require_positive("gamma", self.gyromagnetic_ratio)


@dataclass(frozen=True)
class CavityParams:
    omega_a: float
    omega_b: float
    kappa_a_c: float
    kappa_a_i: float
    kappa_b_c: float
    kappa_b_i: float

    def __post_init__(self):
        _require_positive("omega_a", self.omega_a)
        _require_positive("omega_b", self.omega_b)
        for name in ("kappa_a_c", "kappa_a_i", "kappa_b_c", "kappa_b_i"):
            _require_non_negative(name, getattr(self, name))
        if not self.omega_a > 1000 * self.omega_b:
            raise ValidationError(
                "omega_a must exceed 1000 * omega_b "
                f"(got omega_a={self.omega_a!r}, omega_b={self.omega_b!r})",
                key="omega_a",
            )


@dataclass(frozen=True)
class DeviceConfig:
    """Full parameter set for one device.

    ``magnet`` is ``None`` for the bare erbium transducer. ``delta_cap`` is
    the optical detuning used by sweeps, which hold it fixed. Volume and
    temperature are carried for provenance only.
    """

    erbium: ErbiumParams
    cavities: CavityParams
    magnet: Optional[MagnetParams] = None
    static_field_bz: float = 0.0
    delta_cap: float = DEFAULT_DELTA_CAP
    volume_mm3: Optional[float] = None
    temperature_k: Optional[float] = None
    constants: PhysicalConstants = PhysicalConstants()
    notes: tuple = field(default=(), compare=False)

    @property
    def has_magnet(self) -> bool:
        return self.magnet is not None

    def without_magnet(self) -> "DeviceConfig":
        return dataclasses.replace(self, magnet=None)

    def replace(self, **changes) -> "DeviceConfig":
        return dataclasses.replace(self, **changes)


# (section, key) -> (dataclass attribute, required)
CONFIG_KEYS = {
    "erbium": {
        "n_er": ("n_er", True),
        "g_g": ("g_ground", True),
        "g_e": ("g_excited", True),
        "beta_minus": ("beta_minus", True),
        "g_a": ("g_a", True),
        "g_b": ("g_b", True),
        "rabi_pump": ("rabi_pump", True),
        "sigma_b": ("sigma_spin", True),
        "sigma_a": ("sigma_optical", True),
        "delta_e": ("delta_e_zero_field", False),
    },
    "magnet": {
        "n_fe": ("n_fe", True),
        "g_s": ("g_s", True),
        "z": ("coordination_z", True),
        "j_perp": ("j_perp", True),
        "j_par": ("j_par", True),
        "m_s": ("saturation_magnetization", True),
        "g_b_tilde": ("g_b_tilde", True),
        "sigma_b_tilde": ("sigma_magnon", True),
        "gamma": ("gyromagnetic_ratio", False),
        "d_z": ("dmi_dz", False),
    },
    "cavities": {
        "omega_a": ("omega_a", True),
        "omega_b": ("omega_b", True),
        "kappa_a_c": ("kappa_a_c", True),
        "kappa_a_i": ("kappa_a_i", True),
        "kappa_b_c": ("kappa_b_c", True),
        "kappa_b_i": ("kappa_b_i", True),
    },
    "fields": {
        "b_z": ("static_field_bz", True),
        "delta_cap": ("delta_cap", False),
    },
    "sample": {
        "volume": ("volume_mm3", False),
        "temperature": ("temperature_k", False),
    },
}
_REQUIRED_SECTIONS = ("erbium", "cavities", "fields")


def _read_section(parser, section):
    schema = CONFIG_KEYS[section]
    values = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"unknown key '{section}.{key}'", key=f"{section}.{key}")
        try:
            values[schema[key][0]] = float(raw)
        except ValueError:
            raise ConfigError(
                f"'{section}.{key}' is not a number: {raw!r}", key=f"{section}.{key}"
            ) from None
    for key, (attr, required) in schema.items():
        if required and attr not in values:
            raise ConfigError(f"missing key '{section}.{key}'", key=f"{section}.{key}")
    return values


def load_config(text: str) -> DeviceConfig:
    """Parse a configuration document into a validated :class:`DeviceConfig`."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__none__"
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    for section in parser.sections():
        if section not in CONFIG_KEYS:
            raise ConfigError(f"unknown section '[{section}]'", key=section)
    for section in _REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigError(f"missing section '[{section}]'", key=section)

    notes = []
    erbium = ErbiumParams(**_read_section(parser, "erbium"))
    cavities = CavityParams(**_read_section(parser, "cavities"))
    magnet = None
    if parser.has_section("magnet"):
        mvals = _read_section(parser, "magnet")
        if mvals["n_fe"] == _N_FE_TYPO:
            msg = f"n_fe={_N_FE_TYPO:g} read as the tabulated typo; using {CANONICAL_N_FE:g}"
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)
            mvals["n_fe"] = CANONICAL_N_FE
        magnet = MagnetParams(**mvals)
        if "gyromagnetic_ratio" not in mvals:
            notes.append(f"gamma derived as g_s * mu_B/h = {magnet.gyromagnetic_ratio!r} Hz/T")
    else:
        notes.append("no [magnet] section: h_perp and g_b_tilde are zero")
    extra = _read_section(parser, "fields")
    if parser.has_section("sample"):
        extra.update(_read_section(parser, "sample"))
    return DeviceConfig(
        erbium=erbium, cavities=cavities, magnet=magnet, notes=tuple(notes), **extra
    )


def _fmt(value):
    return repr(float(value))


def dump_config(cfg: DeviceConfig) -> str:
    """Serialize ``cfg`` so that :func:`load_config` reproduces it exactly."""
    sources = {
        "erbium": cfg.erbium,
        "magnet": cfg.magnet,
        "cavities": cfg.cavities,
        "fields": cfg,
        "sample": cfg,
    }
    lines = []
    for section, schema in CONFIG_KEYS.items():
        obj = sources[section]
        if obj is None:
            continue
        body = []
        for key, (attr, _required) in schema.items():
            value = getattr(obj, attr)
            if value is not None:
                body.append(f"{key} = {_fmt(value)}")
        if body:
            lines.append(f"[{section}]")
            lines.extend(body)
            lines.append("")
    return "\n".join(lines)


def read_config(path) -> DeviceConfig:
    return load_config(Path(path).read_text())


def builtin_config_names():
    root = resources.files("magtrans") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config(name) -> DeviceConfig:
    """Load a config by path, by name in ``$MAGTRANS_CONFIG_DIR``, or by built-in name."""
    path = Path(name)
    if path.is_file():
        return read_config(path)
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        for candidate in (Path(env_dir) / name, Path(env_dir) / f"{name}.cfg"):
            if candidate.is_file():
                return read_config(candidate)
    stem = name[:-4] if str(name).endswith(".cfg") else str(name)
    builtin = resources.files("magtrans") / "configs" / f"{stem}.cfg"
    if builtin.is_file():
        return load_config(builtin.read_text())
    raise ConfigError(f"no configuration named {name!r}", key=str(name))


def perp_exchange_to_coupling(j_perp: float, z: float, beta_minus: float) -> float:
    """Per-spin flip-flop coupling from symmetric perpendicular exchange.

    The magnon normalization ``1/sqrt(n_fe)`` is applied later, when the
    Hamiltonian is assembled.
    """
    return -j_perp * z * beta_minus / 2.0


def dmi_to_coupling(dz: float, z: float, beta_minus: float) -> complex:
    """Flip-flop coupling contributed by a DM vector parallel to the magnetization.

    The antisymmetric term ``-(D_z/2i)(S1+ S2- - S1- S2+)`` gives a purely
    imaginary element, a quarter turn from the symmetric-exchange coupling.
    Add it to :func:`perp_exchange_to_coupling` as a complex number.
    """
    return -0.5j * dz * z * beta_minus


def microwave_field_to_couplings(b_field_amp: float, cfg: DeviceConfig):
    """Per-spin microwave couplings ``(g_b, g_b_tilde)`` for a drive amplitude in tesla."""
    if b_field_amp < 0:
        raise ValidationError("b_field_amp must be non-negative", key="b_field_amp")
    mu = cfg.constants.bohr_magneton_over_h
    g_b = mu * cfg.erbium.g_ground * cfg.erbium.beta_minus * b_field_amp / 4.0
    g_b_tilde = 0.0
    if cfg.magnet is not None:
        g_b_tilde = mu * cfg.magnet.g_s * b_field_amp / 4.0
    return g_b, g_b_tilde


def total_couplings(cfg: DeviceConfig):
    """Ensemble couplings ``(g_a sqrt(N_Er), g_b sqrt(N_Er), g_b_tilde sqrt(N_Fe))``."""
    root_er = math.sqrt(cfg.erbium.n_er)
    g_tilde_tot = 0.0
    if cfg.magnet is not None:
        g_tilde_tot = cfg.magnet.g_b_tilde * math.sqrt(cfg.magnet.n_fe)
    return cfg.erbium.g_a * root_er, cfg.erbium.g_b * root_er, g_tilde_tot
