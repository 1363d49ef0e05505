"""Per-drop network state: which BSs serve whom, on which pilots.

Also holds the closed-form load statistics (active BS density, UEs per
BS) that the simulator is cross-checked against.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln, xlogy

from .errors import ConfigurationError, DomainError


# ---------------------------------------------------------------------------
# closed-form load model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NbModel:
    """Negative binomial model of the number of UEs per BS."""

    rho: float
    lam: float
    q: float = 3.5

    def __post_init__(self):
        if not self.q > 0:
            raise ConfigurationError(f"q must be positive, got {self.q}")
        if self.rho < 0:
            raise ConfigurationError(f"UE density must be non-negative, got {self.rho}")
        if not self.lam > 0:
            raise ConfigurationError(f"BS density must be positive, got {self.lam}")

    @property
    def p(self) -> float:
        """Success probability ``rho / (rho + q lam)``."""
        return self.rho / (self.rho + self.q * self.lam)


def active_bs_density(model: NbModel) -> float:
    """Density of BSs with at least one UE, ``lam [1 - (1 + rho/(q lam))**-q]``."""
    x = model.rho / (model.q * model.lam)
    return float(-model.lam * np.expm1(-model.q * np.log1p(x)))


def nb_pmf(k, model: NbModel):
    """PMF of the number of UEs associated with a BS (vectorised over ``k``)."""
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k != np.floor(k)):
        raise DomainError("k must be a non-negative integer")
    q, p = model.q, model.p
    log_pmf = (gammaln(k + q) - gammaln(k + 1.0) - gammaln(q)
               + xlogy(k, p) + q * np.log1p(-p))
    out = np.exp(log_pmf)
    return float(out) if out.ndim == 0 else out


def nb_tail(k: int, model: NbModel) -> float:
    """``P[K >= k]`` via the regularised incomplete beta function."""
    if k <= 0:
        return 1.0
    if model.p == 0.0:
        return 0.0
    return float(betainc(k, model.q, model.p))


def truncated_nb_pmf(k, model: NbModel, k_u: int):
    """PMF of the number of *scheduled* UEs at an active BS with cap ``k_u``.

    Zero-truncated negative binomial whose mass at and above the cap is
    lumped into ``k_u``.
    """
    k_arr = np.asarray(k)
    if k_u < 1:
        raise DomainError(f"scheduling cap must be >= 1, got {k_u}")
    if np.any(k_arr < 1) or np.any(k_arr > k_u) or np.any(k_arr != np.floor(k_arr)):
        raise DomainError(f"k must be an integer in [1, {k_u}]")
    if model.rho == 0:
        raise DomainError("no active BSs when the UE density is zero")
    active = -np.expm1(-model.q * np.log1p(model.rho / (model.q * model.lam)))
    below = nb_pmf(np.minimum(k_arr, k_u - 1), model) / active
    out = np.where(k_arr == k_u, nb_tail(k_u, model) / active, below)
    return float(out) if out.ndim == 0 else out


def scheduling_cap(m: int, k_t: int) -> int:
    """Max UEs scheduled per BS: ``min(k_t, floor(m/4))`` clamped to at least one."""
    if m < 1 or k_t < 1:
        raise ConfigurationError(f"need m >= 1 and k_t >= 1, got m={m}, k_t={k_t}")
    return max(1, min(int(k_t), int(m) // 4))


@dataclass(frozen=True)
class DeploymentBudget:
    antenna_density: float
    bs_density: float
    antennas_per_bs: int

    def __post_init__(self):
        if self.antennas_per_bs < 1 or int(self.antennas_per_bs) != self.antennas_per_bs:
            raise ConfigurationError(
                f"antennas per BS must be a positive integer, got {self.antennas_per_bs}")
        if not np.isclose(self.bs_density * self.antennas_per_bs, self.antenna_density,
                          rtol=1e-9, atol=0.0):
            raise ConfigurationError(
                f"bs_density {self.bs_density} x antennas_per_bs {self.antennas_per_bs} "
                f"!= antenna_density {self.antenna_density}")

    @classmethod
    def from_antennas(cls, antenna_density: float, m: int) -> "DeploymentBudget":
        if not antenna_density > 0:
            raise ConfigurationError(f"antenna density must be positive, got {antenna_density}")
        if m < 1 or int(m) != m:
            raise ConfigurationError(f"antennas per BS must be a positive integer, got {m}")
        return cls(float(antenna_density), antenna_density / m, int(m))

    @classmethod
    def from_bs_density(cls, antenna_density: float, bs_density: float) -> "DeploymentBudget":
        if not bs_density > 0:
            raise ConfigurationError(f"BS density must be positive, got {bs_density}")
        m = antenna_density / bs_density
        if m < 1 or abs(m - round(m)) > 1e-9 * m:
            raise ConfigurationError(
                f"antenna_density {antenna_density} / bs_density {bs_density} = {m:g} "
                "antennas per BS is not a positive integer")
        return cls(float(antenna_density), float(bs_density), int(round(m)))


# ---------------------------------------------------------------------------
# association and cells
# ---------------------------------------------------------------------------

def associate(gains: np.ndarray, dists: np.ndarray) -> np.ndarray:
    """Serving BS per UE from a dense ``(n_ue, n_bs)`` matrix of materialised gains.

    Largest gain wins; ties go to the shorter link, then the lower BS index.
    """
    gains = np.atleast_2d(gains)
    dists = np.atleast_2d(dists)
    if gains.shape[1] == 0:
        raise ConfigurationError("no BSs in the window")
    best = gains.max(axis=1, keepdims=True)
    d = np.where(gains == best, dists, np.inf)
    return np.argmin(d, axis=1)


@dataclass(frozen=True)
class CellState:
    bs_index: int
    attached_ues: np.ndarray
    scheduled_ues: np.ndarray
    pilot_of_ue: dict
    is_active: bool
    per_ue_power: float


@dataclass
class CellTable:
    """All cells of one drop, stored column-wise.

    ``sched_*`` arrays list the scheduled UEs grouped by cell in ascending
    BS index; ``cell_start[b]:cell_start[b+1]`` slices the streams of BS b.
    """

    serving: np.ndarray       # (n_ue,) serving BS per UE
    counts: np.ndarray        # (n_bs,) attached UEs
    khat: np.ndarray          # (n_bs,) scheduled UEs
    sched_ue: np.ndarray      # (n_streams,)
    sched_bs: np.ndarray      # (n_streams,)
    sched_pilot: np.ndarray   # (n_streams,) in 0..k_t-1
    cell_start: np.ndarray    # (n_bs + 1,)
    pilot_of_ue: np.ndarray   # (n_ue,) -1 when unscheduled
    p_bs_tx: float

    @property
    def active(self) -> np.ndarray:
        return self.counts > 0

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.counts))

    @property
    def n_streams(self) -> int:
        return int(self.sched_ue.size)

    @property
    def per_ue_power(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.khat > 0, self.p_bs_tx / np.maximum(self.khat, 1), 0.0)

    def cell(self, b: int) -> CellState:
        lo, hi = self.cell_start[b], self.cell_start[b + 1]
        ues = self.sched_ue[lo:hi]
        return CellState(
            bs_index=int(b),
            attached_ues=np.flatnonzero(self.serving == b),
            scheduled_ues=ues,
            pilot_of_ue={int(u): int(p) for u, p in zip(ues, self.sched_pilot[lo:hi])},
            is_active=bool(self.counts[b] > 0),
            per_ue_power=float(self.per_ue_power[b]),
        )

    def cells(self) -> list:
        return [self.cell(b) for b in range(self.counts.size)]


def build_cells(serving: np.ndarray, n_bs: int, k_u: int, k_t: int, p_bs_tx: float,
                rng: np.random.Generator) -> CellTable:
    """Idle mode, random scheduling of up to ``k_u`` UEs and random pilots per cell."""
    if k_u > k_t:
        raise ConfigurationError(f"scheduling cap {k_u} exceeds pilot count {k_t}")
    serving = np.asarray(serving)
    n_ue = serving.size
    counts = np.bincount(serving, minlength=n_bs)
    khat = np.minimum(counts, k_u)

    # a uniform key per UE: the k_u smallest keys in each cell are scheduled
    order = np.lexsort((rng.random(n_ue), serving))
    first = np.concatenate(([0], np.cumsum(counts)))
    rank = np.arange(n_ue) - first[serving[order]]
    chosen = rank < k_u
    sched_ue = order[chosen]
    sched_bs = serving[sched_ue]
    sched_rank = rank[chosen]

    # per active cell a random ordering of the pilot set; stream r takes pilot r
    active_ids = np.flatnonzero(counts)
    slot = np.full(n_bs, -1)
    slot[active_ids] = np.arange(active_ids.size)
    perms = np.argsort(rng.random((active_ids.size, k_t)), axis=1)
    sched_pilot = perms[slot[sched_bs], sched_rank] if sched_ue.size else np.zeros(0, int)

    pilot_of_ue = np.full(n_ue, -1)
    pilot_of_ue[sched_ue] = sched_pilot
    cell_start = np.concatenate(([0], np.cumsum(khat)))
    return CellTable(serving, counts, khat, sched_ue, sched_bs, sched_pilot,
                     cell_start, pilot_of_ue, float(p_bs_tx))
