"""ASE and the SINR distribution of typical-UE samples."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DENSITY_STREAMS = "streams"
DENSITY_ACTIVE_BS = "active-bs"


def _fmean(x) -> float:
    x = np.asarray(x, dtype=float)
    return math.fsum(x.tolist()) / x.size


def _fvar(x) -> float:
    """Unbiased sample variance, order independent."""
    x = np.asarray(x, dtype=float)
    mu = _fmean(x)
    return math.fsum(((x - mu) ** 2).tolist()) / (x.size - 1)


@dataclass
class SinrSampleSet:
    """Typical-UE SINR samples of one configuration point, one entry per drop.

    ``sinr`` is NaN where the typical UE was not scheduled.  ``n_active`` and
    ``n_streams`` count active BSs and scheduled UEs in the window per drop.
    """

    sinr: np.ndarray
    scheduled: np.ndarray
    drop_index: np.ndarray
    n_active: np.ndarray
    n_streams: np.ndarray
    area_km2: float
    khat_hist: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    config_hash: str = ""

    def __post_init__(self):
        order = np.argsort(self.drop_index, kind="stable")
        for name in ("sinr", "scheduled", "drop_index", "n_active", "n_streams"):
            setattr(self, name, np.asarray(getattr(self, name))[order])

    def __len__(self):
        return self.sinr.size

    @property
    def scheduled_sinr(self) -> np.ndarray:
        return self.sinr[self.scheduled]

    @property
    def empirical_active_density(self) -> float:
        return _fmean(self.n_active) / self.area_km2

    @property
    def stream_density(self) -> float:
        return _fmean(self.n_streams) / self.area_km2

    @property
    def mean_khat(self) -> float:
        """Average scheduled UEs per active BS, pooled over drops."""
        act = int(np.sum(self.n_active))
        return int(np.sum(self.n_streams)) / act if act else 0.0

    @classmethod
    def merge(cls, *parts: "SinrSampleSet") -> "SinrSampleSet":
        """Combine partial sets; the result does not depend on the argument order."""
        width = max(p.khat_hist.size for p in parts)
        hist = np.zeros(width, dtype=np.int64)
        for p in parts:
            hist[: p.khat_hist.size] += p.khat_hist
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
        return cls(cat("sinr"), cat("scheduled"), cat("drop_index"), cat("n_active"),
                   cat("n_streams"), parts[0].area_km2, hist, parts[0].config_hash)


@dataclass
class AseResult:
    ase: float
    ci95_halfwidth: Optional[float]
    gamma0: float
    n_samples: int
    density: float
    mean_rate: float


def ase(samples: SinrSampleSet, gamma0: float = 1.0, density_mode: str = DENSITY_STREAMS,
        k_u_mean: Optional[float] = None, lambda_tilde: Optional[float] = None) -> AseResult:
    """Area spectral efficiency in bps/Hz/km^2.

    ``density * mean(log2(1 + sinr) * [sinr >= gamma0])`` over the drops in
    which the typical UE was scheduled.  With ``density_mode="streams"`` the
    density is that of scheduled streams, ``lambda_tilde * k_u_mean``; with
    ``"active-bs"`` it is the active BS density alone.  ``lambda_tilde``
    and ``k_u_mean`` default to the values measured in ``samples``.

    ``gamma0`` is linear (1.0 is 0 dB).
    """
    sinr = samples.scheduled_sinr
    if sinr.size == 0:
        raise ValueError("no scheduled typical-UE samples")
    lam = samples.empirical_active_density if lambda_tilde is None else float(lambda_tilde)
    if density_mode == DENSITY_STREAMS:
        k_bar = samples.mean_khat if k_u_mean is None else float(k_u_mean)
        per_drop = samples.n_streams
    elif density_mode == DENSITY_ACTIVE_BS:
        k_bar = 1.0
        per_drop = samples.n_active
    else:
        raise ValueError(f"unknown density mode {density_mode!r}")
    density = lam * k_bar

    rate = np.where(sinr >= gamma0, np.log2(1.0 + sinr), 0.0)
    mean_rate = _fmean(rate)
    value = density * mean_rate

    ci = None
    if rate.size > 1 and per_drop.size > 1:
        # delta method; the density is itself a sample mean over drops
        var_rate = _fvar(rate) / rate.size
        if lambda_tilde is None and k_u_mean is None:
            var_dens = _fvar(per_drop / samples.area_km2) / per_drop.size
        else:
            var_dens = 0.0
        ci = 1.959963984540054 * math.sqrt(density ** 2 * var_rate + mean_rate ** 2 * var_dens)
    return AseResult(value, ci, float(gamma0), int(rate.size), density, mean_rate)


class EmpiricalCdf:
    """Right-continuous empirical CDF of SINR samples."""

    def __init__(self, samples):
        x = np.asarray(samples, dtype=float)
        x = x[~np.isnan(x)]
        if x.size == 0:
            raise ValueError("empty sample")
        self.x = np.sort(x)

    def __call__(self, gamma):
        out = np.searchsorted(self.x, gamma, side="right") / self.x.size
        return float(out) if np.ndim(out) == 0 else out

    def coverage(self, gamma0):
        """Fraction of samples strictly above ``gamma0``."""
        return 1.0 - self(gamma0)

    def quantile(self, p):
        return np.quantile(self.x, p)


def sinr_cdf(samples) -> EmpiricalCdf:
    if isinstance(samples, SinrSampleSet):
        samples = samples.scheduled_sinr
    return EmpiricalCdf(samples)
