"""Monte Carlo evaluation of area spectral efficiency in dense multi-antenna
downlink networks under pilot contamination."""

from .config import SimConfig, load_config
from .engine import run_drop, run_point
from .errors import ConfigurationError, DomainError, NumericalError
from .metrics import SinrSampleSet, ase, sinr_cdf
from .sweep import SweepSpec, load_sweep, preset, run_sweep

__all__ = [
    "SimConfig", "load_config", "run_drop", "run_point", "ConfigurationError", "DomainError",
    "NumericalError", "SinrSampleSet", "ase", "sinr_cdf", "SweepSpec", "load_sweep", "preset",
    "run_sweep",
]
__version__ = "0.1.0"
