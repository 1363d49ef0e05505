"""Simulation parameters and their TOML file format.

Every key carries its unit in the name (``_dbm``, ``_km``, ``_per_km2``);
conversion to linear units happens here and nowhere else.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError
from .estimation import MMSE_INTERFERENCE_ONLY, MMSE_STANDARD
from .metrics import DENSITY_ACTIVE_BS, DENSITY_STREAMS
from .network import NbModel, scheduling_cap
from .propagation import ExponentialLos, PathLossModel, dbm_to_watts

SCOPE_TAGGED = "tagged"
SCOPE_FULL = "full"

# file section -> keys it may hold
SECTIONS = {
    "deployment": ("antenna_density_per_km2", "antennas_per_bs", "bs_density_per_km2",
                   "ue_density_per_km2", "nb_q", "window_side_km"),
    "radio": ("pilot_count", "bs_tx_power_dbm", "noise_power_dbm", "ue_baseline_power_dbm",
              "uplink_noise_power_dbm", "pathloss_compensation", "sinr_threshold_db"),
    "pathloss": ("los_gain_at_1km_db", "los_exponent", "nlos_gain_at_1km_db", "nlos_exponent",
                 "height_difference_km", "los_d1_km", "los_d2_km"),
    "simulation": ("drops", "seed", "pilot_contamination", "mmse_denominator", "density_mode",
                   "contamination_scope"),
}


@dataclass(frozen=True)
class SimConfig:
    antenna_density_per_km2: float = 1000.0
    antennas_per_bs: int = 10
    ue_density_per_km2: float = 600.0
    nb_q: float = 3.5
    window_side_km: float = 4.0

    pilot_count: int = 20
    bs_tx_power_dbm: float = 24.0
    noise_power_dbm: float = -95.0
    ue_baseline_power_dbm: float = 10.0
    uplink_noise_power_dbm: float = -95.0
    pathloss_compensation: float = 1.0
    sinr_threshold_db: float = 0.0

    los_gain_at_1km_db: float = -103.8
    los_exponent: float = 2.09
    nlos_gain_at_1km_db: float = -145.4
    nlos_exponent: float = 3.75
    height_difference_km: float = 0.0085
    los_d1_km: float = 0.156
    los_d2_km: float = 0.03

    drops: int = 10000
    seed: int = 1
    pilot_contamination: bool = True
    mmse_denominator: str = MMSE_STANDARD
    density_mode: str = DENSITY_STREAMS
    contamination_scope: str = SCOPE_TAGGED

    def __post_init__(self):
        self.validate()

    def validate(self):
        def bad(name, why):
            raise ConfigurationError(f"{name}: {why} (got {getattr(self, name)!r})")

        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.type in (float, int, "float", "int") and (
                    isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating))):
                bad(f.name, "must be a number")
            if f.type in (str, "str") and not isinstance(v, str):
                bad(f.name, "must be a string")
        for name in ("antenna_density_per_km2", "window_side_km", "nb_q", "height_difference_km",
                     "los_exponent", "nlos_exponent", "los_d1_km", "los_d2_km"):
            if not (np.isfinite(getattr(self, name)) and getattr(self, name) > 0):
                bad(name, "must be a positive number")
        for name in ("antennas_per_bs", "pilot_count", "drops"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                bad(name, "must be a positive integer")
        if not (np.isfinite(self.ue_density_per_km2) and self.ue_density_per_km2 >= 0):
            bad("ue_density_per_km2", "must be a non-negative number")
        if not 0.0 <= self.pathloss_compensation <= 1.0:
            bad("pathloss_compensation", "must lie in [0, 1]")
        if self.mmse_denominator not in (MMSE_STANDARD, MMSE_INTERFERENCE_ONLY):
            bad("mmse_denominator", f"must be {MMSE_STANDARD!r} or {MMSE_INTERFERENCE_ONLY!r}")
        if self.density_mode not in (DENSITY_STREAMS, DENSITY_ACTIVE_BS):
            bad("density_mode", f"must be {DENSITY_STREAMS!r} or {DENSITY_ACTIVE_BS!r}")
        if self.contamination_scope not in (SCOPE_TAGGED, SCOPE_FULL):
            bad("contamination_scope", f"must be {SCOPE_TAGGED!r} or {SCOPE_FULL!r}")
        if not isinstance(self.pilot_contamination, bool):
            bad("pilot_contamination", "must be true or false")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            bad("seed", "must be a non-negative integer")
        for name in ("antennas_per_bs", "pilot_count", "drops", "seed"):
            object.__setattr__(self, name, int(getattr(self, name)))

    # derived quantities -------------------------------------------------

    @property
    def bs_density_per_km2(self) -> float:
        return self.antenna_density_per_km2 / self.antennas_per_bs

    @property
    def k_u(self) -> int:
        return scheduling_cap(self.antennas_per_bs, self.pilot_count)

    @property
    def p_bs_tx_w(self) -> float:
        return float(dbm_to_watts(self.bs_tx_power_dbm))

    @property
    def noise_w(self) -> float:
        return float(dbm_to_watts(self.noise_power_dbm))

    @property
    def p_ue_w(self) -> float:
        return float(dbm_to_watts(self.ue_baseline_power_dbm))

    @property
    def noise_ul_w(self) -> float:
        return float(dbm_to_watts(self.uplink_noise_power_dbm))

    @property
    def gamma0(self) -> float:
        return 10.0 ** (self.sinr_threshold_db / 10.0)

    def path_loss_model(self) -> PathLossModel:
        return PathLossModel.single_slope_db(
            self.los_gain_at_1km_db, self.los_exponent, self.nlos_gain_at_1km_db,
            self.nlos_exponent, self.height_difference_km,
            ExponentialLos(self.los_d1_km, self.los_d2_km))

    def nb_model(self) -> NbModel:
        return NbModel(self.ue_density_per_km2, self.bs_density_per_km2, self.nb_q)

    def replace(self, **changes) -> "SimConfig":
        return with_overrides(self, changes)

    def config_hash(self) -> str:
        """Hash of the physical and algorithmic parameters (drop count excluded)."""
        d = dataclasses.asdict(self)
        d.pop("drops")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


FIELDS = {f.name for f in dataclasses.fields(SimConfig)}


def with_overrides(cfg: SimConfig, changes: dict) -> SimConfig:
    """``dataclasses.replace`` that also accepts ``bs_density_per_km2``."""
    changes = dict(changes)
    if "bs_density_per_km2" in changes:
        lam = changes.pop("bs_density_per_km2")
        ant = changes.get("antenna_density_per_km2", cfg.antenna_density_per_km2)
        m = _antennas_from_density(ant, lam)
        if "antennas_per_bs" in changes and changes["antennas_per_bs"] != m:
            raise ConfigurationError(
                f"antennas_per_bs {changes['antennas_per_bs']} and bs_density_per_km2 {lam} "
                f"disagree for antenna_density_per_km2 {ant}")
        changes["antennas_per_bs"] = m
    unknown = set(changes) - FIELDS
    if unknown:
        raise ConfigurationError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    return dataclasses.replace(cfg, **changes)


def _antennas_from_density(antenna_density, bs_density) -> int:
    if not bs_density > 0:
        raise ConfigurationError(f"bs_density_per_km2 must be positive (got {bs_density!r})")
    m = antenna_density / bs_density
    if m < 1 or abs(m - round(m)) > 1e-9 * m:
        raise ConfigurationError(
            f"antenna_density_per_km2 {antenna_density:g} is not a multiple of "
            f"bs_density_per_km2 {bs_density:g} (gives {m:g} antennas per BS)")
    return int(round(m))


def flatten_sections(doc: dict, where: str = "config") -> dict:
    """Map the nested TOML layout onto flat :class:`SimConfig` keys."""
    flat = {}
    for section, body in doc.items():
        if section not in SECTIONS:
            raise ConfigurationError(f"{where}: unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigurationError(f"{where}: [{section}] must be a table")
        for key, value in body.items():
            if key not in SECTIONS[section]:
                raise ConfigurationError(f"{where}: unknown key {section}.{key}")
            flat[key] = value
    return flat


def config_from_dict(doc: dict, base: SimConfig = None, where: str = "config") -> SimConfig:
    flat = flatten_sections(doc, where)
    try:
        return with_overrides(base or SimConfig(), flat)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def read_toml(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def load_config(path) -> SimConfig:
    return config_from_dict(read_toml(path), where=str(path))


def dump_config(cfg: SimConfig) -> str:
    """TOML text for ``cfg``; round-trips through :func:`load_config`."""
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            if key == "bs_density_per_km2":
                continue
            v = getattr(cfg, key)
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, str):
                text = json.dumps(v)
            else:
                text = repr(v)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
