"""Monte Carlo drops and their aggregation into typical-UE samples.

Each drop is an independent network realisation seeded by
``SeedSequence(seed, spawn_key=(drop_index,))``.  Geometry (positions,
LoS states, scheduling, pilots) and small-scale fading use two separate
child streams, so runs that differ only in how channels are estimated
share their geometry drop by drop.

Only the channels that can influence the typical UE are materialised:

* every scheduled UE's channel to its own BS,
* the channel from every active BS to the typical UE,
* the pilot contamination received on the typical UE's pilot, with the
  typical UE's own contribution kept as an explicit vector at every BS
  reusing that pilot (this is what couples other cells' precoders to the
  typical UE).

Every other same-pilot contribution is a sum of independent circularly
symmetric Gaussian vectors and is drawn as one Gaussian of the summed
power.  On pilots other than the typical UE's, contamination only perturbs
precoder directions that are independent of every channel to the typical
UE, and i.i.d. Rayleigh channels are isotropic, so the typical UE's SINR
has the same law either way.  With ``contamination_scope="tagged"`` those
contamination powers are therefore not computed; ``"full"`` computes all
of them.
"""

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .association import associate_network
from .config import SCOPE_FULL, SimConfig
from .errors import NumericalError
from .estimation import draw_channels, mmse_estimate, observe_pilot, uplink_tx_power
from .geometry import Window, place_typical_ue, sample_hppp
from .metrics import SinrSampleSet, ase
from .network import build_cells
from .precoding import SinrBreakdown, typical_ue_sinr, zf_directions

log = logging.getLogger(__name__)

MAX_RESAMPLES = 10
LOS_CUTOFF_KM = 0.2


@dataclass
class DropResult:
    drop_index: int
    scheduled: bool
    breakdown: Optional[SinrBreakdown]
    n_active: int
    n_streams: int
    khat_hist: np.ndarray
    serving_khat: int
    n_resampled: int = 0

    @property
    def sinr(self) -> float:
        return self.breakdown.sinr if self.breakdown is not None else math.nan


def drop_rngs(seed: int, drop_index: int, attempt: int = 0):
    """(geometry, fading) generators for one drop."""
    key = (drop_index,) if attempt == 0 else (drop_index, attempt)
    geo, fade = np.random.SeedSequence(seed, spawn_key=key).spawn(2)
    return np.random.default_rng(geo), np.random.default_rng(fade)


def _contamination(assoc, bs_ids, ue_ids, powers, rng):
    """Gain matrix ``G[i, j]`` from UE ``ue_ids[j]`` to BS ``bs_ids[i]`` and the
    pilot power each BS receives from the other UEs of the group."""
    n = bs_ids.size
    gains = assoc.link_gains(np.repeat(bs_ids, n), np.tile(ue_ids, n), rng).reshape(n, n)
    rx = gains * powers[None, :]
    return gains, rx.sum(axis=1) - np.diag(rx)


def run_drop(cfg: SimConfig, drop_index: int) -> DropResult:
    """One network realisation evaluated at the typical UE.

    A drop whose estimated channel matrix turns out rank deficient is
    redrawn from a derived stream; the retry count is recorded.
    """
    for attempt in range(MAX_RESAMPLES + 1):
        try:
            res = _run_drop(cfg, drop_index, attempt)
        except NumericalError as exc:
            log.warning("drop %d attempt %d resampled: %s", drop_index, attempt, exc)
            continue
        res.n_resampled = attempt
        return res
    raise NumericalError(f"drop {drop_index} failed {MAX_RESAMPLES + 1} times")


def _run_drop(cfg: SimConfig, drop_index: int, attempt: int) -> DropResult:
    geo, fade = drop_rngs(cfg.seed, drop_index, attempt)
    window = Window(cfg.window_side_km)
    model = cfg.path_loss_model()
    m, k_u = cfg.antennas_per_bs, cfg.k_u

    bs = sample_hppp(cfg.bs_density_per_km2, window, geo)
    ue = place_typical_ue(sample_hppp(cfg.ue_density_per_km2, window, geo), window)
    assoc = associate_network(bs, ue, window, model, geo, LOS_CUTOFF_KM)
    cells = build_cells(assoc.serving, len(bs), k_u, cfg.pilot_count, cfg.p_bs_tx_w, geo)

    active_ids = np.flatnonzero(cells.counts)
    hist = np.bincount(cells.khat[active_ids], minlength=k_u + 1)
    serving = int(assoc.serving[0])
    base = dict(drop_index=drop_index, n_active=active_ids.size, n_streams=cells.n_streams,
                khat_hist=hist, serving_khat=int(cells.khat[serving]))
    p_typ = int(cells.pilot_of_ue[0])
    if p_typ < 0:
        return DropResult(scheduled=False, breakdown=None, **base)

    sched_ue, sched_bs, sched_pilot = cells.sched_ue, cells.sched_bs, cells.sched_pilot
    n_s = sched_ue.size
    s_typ = int(np.flatnonzero(sched_ue == 0)[0])
    p_ul = uplink_tx_power(assoc.serving_gain[sched_ue], cfg.pathloss_compensation, cfg.p_ue_w)

    # received contamination power per stream, total and net of an explicit typical-UE term
    contam_total = np.zeros(n_s)
    contam_resid = np.zeros(n_s)
    explicit_typ = np.zeros(n_s, dtype=bool)
    pilots = range(cfg.pilot_count) if cfg.contamination_scope == SCOPE_FULL else (p_typ,)
    for p in pilots:
        grp = np.flatnonzero(sched_pilot == p)
        if grp.size == 0:
            continue
        gains, rx = _contamination(assoc, sched_bs[grp], sched_ue[grp], p_ul[grp], geo)
        contam_total[grp] = rx
        contam_resid[grp] = rx
        if p == p_typ:
            j = int(np.flatnonzero(grp == s_typ)[0])
            others = np.arange(grp.size) != j
            contam_resid[grp[others]] -= gains[others, j] * p_ul[s_typ]
            explicit_typ[grp[others]] = True
    np.maximum(contam_resid, 0.0, out=contam_resid)

    # fading: own channels, channels from every active BS to the typical UE
    h_own = draw_channels(assoc.serving_gain[sched_ue], m, fade)
    slot = np.full(len(bs), -1)
    slot[active_ids] = np.arange(active_ids.size)
    h_to_typ = draw_channels(assoc.typical_gain[active_ids], m, fade)
    h_to_typ[slot[serving]] = h_own[s_typ]

    y = observe_pilot(h_own[:, None, :], p_ul[:, None], cfg.noise_ul_w + contam_resid, fade)
    y[explicit_typ] += math.sqrt(p_ul[s_typ]) * h_to_typ[slot[sched_bs[explicit_typ]]]
    if cfg.pilot_contamination:
        est = mmse_estimate(y, h_own, p_ul, assoc.serving_gain[sched_ue], contam_total,
                            cfg.noise_ul_w, cfg.mmse_denominator)
        h_bar, h_err = est.estimate, est.error
    else:
        h_bar, h_err = h_own, np.zeros_like(h_own)

    # ZF per cell, batched by the number of scheduled UEs
    interferers = []
    f_serv = None
    for k in np.unique(cells.khat[active_ids]):
        ids = active_ids[cells.khat[active_ids] == k]
        streams = cells.cell_start[ids][:, None] + np.arange(k)[None, :]
        f = zf_directions(np.swapaxes(h_bar[streams], -1, -2))
        if serving in ids:
            i = int(np.flatnonzero(ids == serving)[0])
            f_serv = f[i]
            keep = ids != serving
            ids, f = ids[keep], f[keep]
        interferers.append((h_to_typ[slot[ids]], f, np.full(ids.size, cfg.p_bs_tx_w / k)))

    k_typ = s_typ - int(cells.cell_start[serving])
    bd = typical_ue_sinr(h_bar[s_typ], h_err[s_typ], f_serv, k_typ,
                         cfg.p_bs_tx_w / cells.khat[serving], interferers, cfg.noise_w)
    return DropResult(scheduled=True, breakdown=bd, **base)


def _run_block(args):
    cfg, lo, hi = args
    return [run_drop(cfg, i) for i in range(lo, hi)]


def _collect(cfg: SimConfig, results) -> SinrSampleSet:
    width = cfg.k_u + 1
    hist = np.zeros(width, dtype=np.int64)
    for r in results:
        hist += r.khat_hist[:width]
    return SinrSampleSet(
        sinr=np.array([r.sinr for r in results]),
        scheduled=np.array([r.scheduled for r in results], dtype=bool),
        drop_index=np.array([r.drop_index for r in results], dtype=np.int64),
        n_active=np.array([r.n_active for r in results], dtype=np.int64),
        n_streams=np.array([r.n_streams for r in results], dtype=np.int64),
        area_km2=cfg.window_side_km ** 2,
        khat_hist=hist,
        config_hash=cfg.config_hash(),
    )


def run_drops(cfg: SimConfig, start: int, stop: int, workers: int = 1, block: int = 250,
              progress: bool = False) -> list:
    """DropResults for indices ``start..stop-1`` in index order."""
    blocks = [(cfg, lo, min(lo + block, stop)) for lo in range(start, stop, block)]
    out = []
    if workers <= 1 or len(blocks) <= 1:
        it = map(_run_block, blocks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        it = pool.map(_run_block, blocks)
    try:
        for part in it:
            out.extend(part)
            if progress:
                log.info("%s: %d/%d drops", cfg.config_hash(), len(out), stop - start)
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def run_point(cfg: SimConfig, n_drops: Optional[int] = None, workers: int = 1,
              progress: bool = False, ci_target: Optional[float] = None) -> SinrSampleSet:
    """Run ``n_drops`` drops (default ``cfg.drops``) and aggregate them.

    The result depends only on ``cfg`` and the drop count, never on
    ``workers``.  With ``ci_target`` (relative ASE CI half-width) drops
    continue in batches of ``n_drops`` until the target is met, so the
    sample count is no longer fixed by the configuration.
    """
    n = cfg.drops if n_drops is None else int(n_drops)
    if n < 1:
        raise ValueError("need at least one drop")
    results = run_drops(cfg, 0, n, workers, progress=progress)
    samples = _collect(cfg, results)
    if ci_target is not None:
        warnings.warn("adaptive stopping makes the sample count data dependent", stacklevel=2)
        while True:
            res = ase(samples, cfg.gamma0, cfg.density_mode)
            if res.ci95_halfwidth is not None and res.ci95_halfwidth <= ci_target * res.ase:
                break
            start = len(results)
            results += run_drops(cfg, start, start + n, workers, progress=progress)
            samples = _collect(cfg, results)
    return samples
