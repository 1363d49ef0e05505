"""Piecewise LoS/NLoS path loss and LoS probability.

All distances are in km and all gains are linear, so that with
``A_los = 10**-10.38`` and ``alpha_los = 2.09`` a LoS link follows
``103.8 + 20.9 log10(w)`` dB.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

LOS = True
NLOS = False

# relative slack when checking w >= h, absorbs sqrt round-off
_W_TOL = 1e-12


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def dist_3d(r, h):
    """3D link distance from the 2D distance ``r`` and height difference ``h``."""
    out = np.sqrt(np.square(r) + h * h)
    return float(out) if np.ndim(out) == 0 else out


class LosProbabilityModel:
    """Probability that a link of 3D length ``w`` (km) is LoS."""

    def __call__(self, w):
        raise NotImplementedError

    def sup_beyond(self, w_km: float) -> float:
        """An upper bound of the LoS probability over ``[w_km, inf)``.

        Used to thin rare far-away LoS events; 1.0 is always a valid answer.
        """
        return 1.0


@dataclass(frozen=True)
class ExponentialLos(LosProbabilityModel):
    """Two-piece exponential LoS probability.

    ``0.5 - min(0.5, 5 exp(-d1/w)) + min(0.5, 5 exp(-w/d2))``; the min
    operators hide the breakpoints of the piecewise form.
    """

    d1_km: float = 0.156
    d2_km: float = 0.03

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            first = np.minimum(0.5, 5.0 * np.exp(-self.d1_km / w))
        second = np.minimum(0.5, 5.0 * np.exp(-w / self.d2_km))
        out = 0.5 - first + second
        return float(out) if out.ndim == 0 else out

    def sup_beyond(self, w_km: float) -> float:
        # past w1 the first term is saturated at 0.5 and the rest decreases
        w1 = self.d1_km / np.log(10.0)
        if w_km < w1:
            return 1.0
        return float(self(w_km))


@dataclass(frozen=True)
class ConstantLos(LosProbabilityModel):
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"LoS probability must lie in [0, 1], got {self.p}")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        out = np.full(w.shape, self.p)
        return float(out) if out.ndim == 0 else out

    def sup_beyond(self, w_km: float) -> float:
        return self.p


@dataclass(frozen=True)
class PiecewiseLos(LosProbabilityModel):
    """General piecewise form: ``pieces[n]`` applies on ``[breakpoints[n-1], breakpoints[n])``."""

    breakpoints_km: Sequence[float]
    pieces: Sequence[Callable]

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints_km) + 1:
            raise ConfigurationError("need exactly one more piece than breakpoints")
        if np.any(np.diff(self.breakpoints_km) <= 0):
            raise ConfigurationError("LoS probability breakpoints must be strictly increasing")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        seg = np.searchsorted(np.asarray(self.breakpoints_km, dtype=float), w, side="right")
        out = np.zeros(w.shape)
        for n, piece in enumerate(self.pieces):
            mask = seg == n
            if np.any(mask):
                out[mask] = piece(w[mask])
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PathLossSegment:
    """One distance segment; applies for ``w`` below ``d_break_km`` (inf for the last)."""

    d_break_km: float
    a_los: float
    alpha_los: float
    a_nlos: float
    alpha_nlos: float


@dataclass(frozen=True)
class PathLossModel:
    segments: tuple = (
        PathLossSegment(np.inf, 10.0 ** -10.38, 2.09, 10.0 ** -14.54, 3.75),
    )
    height_diff_km: float = 0.0085
    los_prob: LosProbabilityModel = field(default_factory=ExponentialLos)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ConfigurationError("path loss model needs at least one segment")
        breaks = np.array([s.d_break_km for s in segs])
        if not np.isinf(breaks[-1]):
            raise ConfigurationError("last path loss segment must extend to infinity")
        if np.any(np.diff(breaks) <= 0):
            raise ConfigurationError("path loss breakpoints must be strictly increasing")
        for s in segs:
            if min(s.a_los, s.a_nlos, s.alpha_los, s.alpha_nlos) <= 0:
                raise ConfigurationError("path loss constants A and alpha must be positive")
        if not self.height_diff_km > 0:
            raise ConfigurationError("antenna height difference must be positive")

    @classmethod
    def single_slope_db(cls, los_db_at_1km=-103.8, alpha_los=2.09, nlos_db_at_1km=-145.4,
                        alpha_nlos=3.75, height_diff_km=0.0085, los_prob=None):
        seg = PathLossSegment(np.inf, 10.0 ** (los_db_at_1km / 10.0), alpha_los,
                              10.0 ** (nlos_db_at_1km / 10.0), alpha_nlos)
        return cls((seg,), height_diff_km, los_prob if los_prob is not None else ExponentialLos())

    @property
    def _table(self):
        s = self.segments
        return (np.array([x.d_break_km for x in s]),
                np.array([[x.a_nlos, x.a_los] for x in s]),
                np.array([[x.alpha_nlos, x.alpha_los] for x in s]))

    def gain(self, w, is_los):
        """Vectorised linear gain ``A_n w**-alpha_n`` for the given branch flags."""
        w = np.asarray(w, dtype=float)
        is_los = np.asarray(is_los, dtype=bool)
        if np.any(w < self.height_diff_km * (1.0 - _W_TOL)):
            raise DomainError(f"3D distance below the height difference {self.height_diff_km} km")
        if len(self.segments) == 1:
            s = self.segments[0]
            a = np.where(is_los, s.a_los, s.a_nlos)
            alpha = np.where(is_los, s.alpha_los, s.alpha_nlos)
        else:
            breaks, a_tab, alpha_tab = self._table
            seg = np.searchsorted(breaks, w, side="right")
            a = a_tab[seg, is_los.astype(int)]
            alpha = alpha_tab[seg, is_los.astype(int)]
        out = a * w ** (-alpha)
        return float(out) if out.ndim == 0 else out

    def los_reach(self, g):
        """Largest ``w`` at which the LoS gain is still at least ``g`` (vectorised).

        Returns ``height_diff_km`` where even the shortest LoS link is weaker.
        """
        g = np.asarray(g, dtype=float)
        reach = np.full(g.shape, self.height_diff_km)
        lo = self.height_diff_km
        for s in self.segments:
            hi = s.d_break_km
            with np.errstate(divide="ignore"):
                w = (s.a_los / g) ** (1.0 / s.alpha_los)
            w = np.minimum(w, hi)
            ok = w >= lo
            reach = np.where(ok, np.maximum(reach, w), reach)
            lo = hi
        return reach


def path_loss(w, branch: bool, model: PathLossModel):
    """Linear path gain of a link of 3D length ``w`` km on the given branch."""
    return model.gain(w, branch)


def los_probability(w, model):
    """LoS probability; accepts either a :class:`PathLossModel` or a LoS model."""
    if isinstance(model, PathLossModel):
        model = model.los_prob
    return model(w)


@dataclass(frozen=True)
class LinkState:
    dist_2d_km: float
    dist_3d_km: float
    is_los: bool
    gain: float


def materialize_link(r: float, model: PathLossModel, rng: np.random.Generator) -> LinkState:
    """Draw the LoS/NLoS state of one link and evaluate its gain."""
    if r < 0:
        raise DomainError(f"2D distance must be non-negative, got {r}")
    w = dist_3d(r, model.height_diff_km)
    is_los = bool(rng.random() < model.los_prob(w))
    return LinkState(float(r), w, is_los, model.gain(w, is_los))


def materialize_links(r, model: PathLossModel, rng: np.random.Generator):
    """Vectorised :func:`materialize_link`; returns ``(w, is_los, gain)`` arrays."""
    r = np.asarray(r, dtype=float)
    w = dist_3d(r, model.height_diff_km)
    w = np.asarray(w)
    is_los = rng.random(w.shape) < model.los_prob(w)
    return w, is_los, model.gain(w, is_los)
