"""Parameter sweeps over configuration grids and their CSV result tables.

A sweep file is TOML with a ``[base]`` table in the config file layout
(``[base.deployment]``, ``[base.radio]``, ...), one or two ``[[axis]]``
entries and optional ``[[ablation]]`` entries::

    [base.deployment]
    antenna_density_per_km2 = 1000

    [[axis]]
    parameter = "antennas_per_bs"
    values = [2, 4, 8, 10, 16, 20, 40, 100, 200]

    [[axis]]
    parameter = "ue_density_per_km2"
    values = [50, 100, 300, 600]

    [window]
    scaling = "bs-count"     # or "fixed"
    target_bs = 300
    min_side_km = 1.0

Rows come out ablation-major, then in axis order (the last axis varies
fastest).
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import FIELDS, SimConfig, config_from_dict, read_toml, with_overrides
from .errors import ConfigurationError
from .metrics import ase, sinr_cdf
from .network import active_bs_density

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLUMNS = (
    "schema", "point", "ablation",
    "antenna_density_per_km2", "antennas_per_bs", "bs_density_per_km2", "ue_density_per_km2",
    "pilot_count", "pilot_contamination", "mmse_denominator", "density_mode",
    "window_side_km", "sinr_threshold_db",
    "ase", "ci95", "coverage", "lambda_tilde_empirical", "lambda_tilde_closed_form",
    "mean_khat", "scheduled_fraction", "n_drops", "seed", "error",
)

WINDOW_FIXED = "fixed"
WINDOW_BS_COUNT = "bs-count"

AXIS_ALIASES = {"M": "antennas_per_bs", "rho": "ue_density_per_km2",
                "lambda": "bs_density_per_km2"}


@dataclass(frozen=True)
class Axis:
    parameter: str
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ConfigurationError(f"axis {self.parameter!r} has no values")
        if self.parameter not in FIELDS | {"bs_density_per_km2"}:
            raise ConfigurationError(f"axis parameter {self.parameter!r} is not a config key")


@dataclass(frozen=True)
class WindowRule:
    """How the simulation window follows the BS density.

    ``"bs-count"`` shrinks the window so that about ``target_bs`` BSs fall
    inside it, never below ``min_side_km`` nor above the base side.
    """

    scaling: str = WINDOW_FIXED
    target_bs: float = 300.0
    min_side_km: float = 1.0

    def side_km(self, cfg: SimConfig) -> float:
        if self.scaling == WINDOW_FIXED:
            return cfg.window_side_km
        side = math.sqrt(self.target_bs / cfg.bs_density_per_km2)
        return float(min(cfg.window_side_km, max(self.min_side_km, side)))


@dataclass
class SweepSpec:
    base: SimConfig
    axes: list
    ablations: list = field(default_factory=lambda: [("", {})])
    window: WindowRule = field(default_factory=WindowRule)
    name: str = ""

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ConfigurationError("a sweep needs one or two axes")
        if not self.ablations:
            self.ablations = [("", {})]
        if self.window.scaling not in (WINDOW_FIXED, WINDOW_BS_COUNT):
            raise ConfigurationError(f"unknown window scaling {self.window.scaling!r}")
        # every grid point has to be a valid configuration
        self.points()

    def points(self):
        """``(ablation name, SimConfig)`` in row order."""
        grids = [[]]
        for axis in self.axes:
            grids = [g + [(axis.parameter, v)] for g in grids for v in axis.values]
        out = []
        for name, changes in self.ablations:
            for g in grids:
                cfg = with_overrides(self.base, {**dict(g), **changes})
                cfg = cfg.replace(window_side_km=self.window.side_km(cfg))
                out.append((name, cfg))
        return out

    def __len__(self):
        return len(self.points())


@dataclass
class ResultRow:
    point: int
    ablation: str
    cfg: SimConfig
    n_drops: int
    ase: Optional[float] = None
    ci95: Optional[float] = None
    coverage: Optional[float] = None
    lambda_tilde_empirical: Optional[float] = None
    mean_khat: Optional[float] = None
    scheduled_fraction: Optional[float] = None
    error: str = ""

    @property
    def lambda_tilde_closed_form(self) -> float:
        return active_bs_density(self.cfg.nb_model())

    def as_dict(self) -> dict:
        c = self.cfg
        return {
            "schema": SCHEMA_VERSION, "point": self.point, "ablation": self.ablation,
            "antenna_density_per_km2": c.antenna_density_per_km2,
            "antennas_per_bs": c.antennas_per_bs,
            "bs_density_per_km2": c.bs_density_per_km2,
            "ue_density_per_km2": c.ue_density_per_km2,
            "pilot_count": c.pilot_count, "pilot_contamination": c.pilot_contamination,
            "mmse_denominator": c.mmse_denominator, "density_mode": c.density_mode,
            "window_side_km": c.window_side_km, "sinr_threshold_db": c.sinr_threshold_db,
            "ase": self.ase, "ci95": self.ci95, "coverage": self.coverage,
            "lambda_tilde_empirical": self.lambda_tilde_empirical,
            "lambda_tilde_closed_form": self.lambda_tilde_closed_form,
            "mean_khat": self.mean_khat, "scheduled_fraction": self.scheduled_fraction,
            "n_drops": self.n_drops, "seed": c.seed, "error": self.error,
        }


def evaluate_point(cfg: SimConfig, n_drops: Optional[int] = None, workers: int = 1,
                   point: int = 0, ablation: str = "", progress: bool = False) -> ResultRow:
    """Simulate one configuration and summarise it as a :class:`ResultRow`.

    Runtime failures are reported in the row's ``error`` field rather than raised.
    """
    from .engine import run_point

    n = cfg.drops if n_drops is None else int(n_drops)
    row = ResultRow(point, ablation, cfg, n)
    try:
        samples = run_point(cfg, n, workers, progress=progress)
        row.lambda_tilde_empirical = samples.empirical_active_density
        row.mean_khat = samples.mean_khat
        row.scheduled_fraction = float(np.mean(samples.scheduled))
        res = ase(samples, cfg.gamma0, cfg.density_mode)
        row.ase, row.ci95 = res.ase, res.ci95_halfwidth
        row.coverage = sinr_cdf(samples).coverage(cfg.gamma0)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        row.error = f"{type(exc).__name__}: {exc}"
        log.error("point %d failed: %s", point, row.error)
    return row


def run_sweep(spec: SweepSpec, n_drops: Optional[int] = None, workers: int = 1,
              progress: bool = False) -> list:
    rows = []
    for i, (name, cfg) in enumerate(spec.points()):
        if progress:
            log.info("point %d/%d %s M=%d rho=%g", i + 1, len(spec), name or "-",
                     cfg.antennas_per_bs, cfg.ue_density_per_km2)
        rows.append(evaluate_point(cfg, n_drops, workers, i, name, progress))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9g" % v
    return str(v)


def write_csv(rows, fh) -> None:
    """RFC 4180 table with the fixed column set; floats to 9 significant digits."""
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(COLUMNS)
    for r in rows:
        d = r.as_dict()
        w.writerow([_fmt(d[c]) for c in COLUMNS])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# spec files and presets

def sweep_from_dict(doc: dict, where: str = "sweep") -> SweepSpec:
    doc = dict(doc)
    unknown = set(doc) - {"base", "axis", "ablation", "window", "name"}
    if unknown:
        raise ConfigurationError(f"{where}: unknown table(s) {', '.join(sorted(unknown))}")
    base = config_from_dict(doc.get("base", {}), where=f"{where} [base]")
    axes = []
    for a in doc.get("axis", []):
        if set(a) != {"parameter", "values"}:
            raise ConfigurationError(f"{where}: each [[axis]] needs exactly 'parameter' and 'values'")
        if not isinstance(a["values"], list):
            raise ConfigurationError(f"{where}: axis values must be a list")
        axes.append(Axis(AXIS_ALIASES.get(a["parameter"], a["parameter"]), tuple(a["values"])))
    ablations = []
    for i, ab in enumerate(doc.get("ablation", [])):
        ab = dict(ab)
        name = str(ab.pop("name", f"ablation{i}"))
        ablations.append((name, ab))
    win = doc.get("window", {})
    try:
        rule = WindowRule(**win)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: bad [window] table: {exc}") from exc
    return SweepSpec(base, axes, ablations, rule, str(doc.get("name", "")))


def load_sweep(path) -> SweepSpec:
    return sweep_from_dict(read_toml(path), where=str(path))


def _rho_grid():
    # 1..600 UEs/km^2, log spaced, with the round values used in the discussion
    return tuple(sorted({1, 2, 5, 10, 20, 50, 100, 200, 300, 400, 600}))


FIG3_M = (2, 4, 8, 10, 16, 20, 40, 100, 200)
FIG3_RHO = (50, 100, 300, 600)
SCALED = WindowRule(WINDOW_BS_COUNT, 300.0, 1.0)


def preset(name: str, base: Optional[SimConfig] = None) -> SweepSpec:
    """Named sweeps: ``fig1`` .. ``fig4``."""
    base = base or SimConfig()
    if name == "fig1":
        b = base.replace(antenna_density_per_km2=500.0)
        return SweepSpec(b, [Axis("antennas_per_bs", (100, 50, 10, 5, 1)),
                             Axis("ue_density_per_km2", _rho_grid())], window=SCALED, name=name)
    if name == "fig2":
        b = base.replace(antenna_density_per_km2=1000.0)
        return SweepSpec(b, [Axis("antennas_per_bs", (200, 100, 20, 10, 2, 1)),
                             Axis("ue_density_per_km2", _rho_grid())], window=SCALED, name=name)
    if name in ("fig3", "fig4"):
        b = base.replace(antenna_density_per_km2=1000.0,
                         pilot_contamination=(name == "fig3"))
        return SweepSpec(b, [Axis("ue_density_per_km2", FIG3_RHO),
                             Axis("antennas_per_bs", FIG3_M)], window=SCALED, name=name)
    raise ConfigurationError(f"unknown preset {name!r} (choose fig1, fig2, fig3, fig4)")


PRESETS = ("fig1", "fig2", "fig3", "fig4")
