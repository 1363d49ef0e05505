"""Strongest-link association of every UE without a dense link matrix.

The LoS state of a link is only looked at where it can change the
outcome.  Each UE first draws the links to its ``NEAREST_FIRST`` nearest
BSs; let ``g`` be the best gain among them and ``w_k`` the farthest of
those links.  A BS beyond ``reach = max(w_k, sup{w : LoS gain(w) >= g})``
cannot win even when LoS.  Links between ``w_k`` and ``reach`` are then
resolved too:

* those shorter than ``los_cutoff_km`` get one Bernoulli draw each;
* longer ones have LoS probability at most ``tau = sup_{w >= cutoff} Pr(w)``
  and are thinned: a Binomial(N, tau) set of BS-UE pairs is drawn over all
  pairs and each pair kept with probability ``Pr(w) / tau``.

Which links are resolved depends only on links already drawn, so the
unresolved ones stay independent of the association.  A later lookup
(pilot contamination gains) may therefore draw them fresh, while lookups
of resolved links return the stored state.  The typical UE (index 0) has
all of its links drawn explicitly.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .geometry import PointPattern, Window, toroidal_distance_2d
from .network import associate
from .propagation import PathLossModel, dist_3d

# thinning only pays off when far LoS events are rare
_MAX_THINNING_TAU = 1e-2
# links resolved unconditionally before the reach test
NEAREST_FIRST = 4
# slots of the bounded neighbour query before falling back to a ball query
NEAR_QUERY_K = 16


@dataclass
class Association:
    serving: np.ndarray         # (n_ue,)
    serving_gain: np.ndarray    # (n_ue,)
    typical_w: np.ndarray       # (n_bs,) 3D distances from the typical UE
    typical_los: np.ndarray     # (n_bs,)
    typical_gain: np.ndarray    # (n_bs,)
    reach: np.ndarray           # (n_ue,) resolved radius, inf for the typical UE
    los_keys: np.ndarray        # sorted bs * n_ue + ue of resolved LoS links
    bs: np.ndarray
    ue: np.ndarray
    window: Window
    model: PathLossModel

    @property
    def n_bs(self) -> int:
        return self.bs.shape[0]

    @property
    def n_ue(self) -> int:
        return self.ue.shape[0]

    def link_los(self, bs_idx, ue_idx, rng: np.random.Generator):
        """LoS flags and 3D lengths of arbitrary links, consistent with association."""
        bs_idx = np.asarray(bs_idx, dtype=np.int64)
        ue_idx = np.asarray(ue_idx, dtype=np.int64)
        r = toroidal_distance_2d(self.bs[bs_idx], self.ue[ue_idx], self.window)
        w = np.asarray(dist_3d(r, self.model.height_diff_km))
        los = np.zeros(w.shape, dtype=bool)

        typ = ue_idx == 0
        los[typ] = self.typical_los[bs_idx[typ]]
        other = ~typ
        keys = bs_idx[other] * self.n_ue + ue_idx[other]
        if self.los_keys.size:
            pos = np.minimum(np.searchsorted(self.los_keys, keys), self.los_keys.size - 1)
            stored = self.los_keys[pos] == keys
        else:
            stored = np.zeros(keys.shape, dtype=bool)
        w_other = w[other]
        free = ~stored & (w_other > self.reach[ue_idx[other]])
        draw = np.zeros(keys.shape, dtype=bool)
        if np.any(free):
            draw[free] = rng.random(np.count_nonzero(free)) < self.model.los_prob(w_other[free])
        los[other] = stored | draw
        return w, los

    def link_gains(self, bs_idx, ue_idx, rng: np.random.Generator) -> np.ndarray:
        w, los = self.link_los(bs_idx, ue_idx, rng)
        return self.model.gain(w, los)


def _neighbours_within(tree, pts, rows, radius, n_bs):
    """(row, bs) pairs with the BS within ``radius[i]`` of ``pts[rows[i]]``.

    A fixed-k query returns flat arrays; only rows that fill all k slots
    fall back to a ball query.
    """
    if rows.size == 0:
        return rows, rows
    k = min(n_bs, NEAR_QUERY_K)
    d, idx = tree.query(pts[rows], k=k, distance_upper_bound=float(radius.max()))
    d, idx = d.reshape(rows.size, k), idx.reshape(rows.size, k)
    ok = (idx < n_bs) & (d <= radius[:, None])
    full = ok[:, -1].copy() if k < n_bs else np.zeros(rows.size, dtype=bool)
    ok[full] = False
    cu, cb = np.broadcast_to(rows[:, None], ok.shape)[ok], idx[ok]
    if np.any(full):
        lists = tree.query_ball_point(pts[rows[full]], radius[full], return_sorted=False)
        lens = np.fromiter(map(len, lists), dtype=np.int64, count=len(lists))
        cu = np.concatenate([cu, np.repeat(rows[full], lens)])
        cb = np.concatenate([cb, np.fromiter(itertools.chain.from_iterable(lists),
                                             dtype=np.int64, count=int(lens.sum()))])
    return cu, cb


def associate_network(bs: PointPattern, ue: PointPattern, window: Window,
                      model: PathLossModel, rng: np.random.Generator,
                      los_cutoff_km: float = 0.2) -> Association:
    """Attach every UE to the BS with the largest materialised gain.

    Ties go to the shorter link, then the lower BS index (as in
    :func:`network.associate`).  Index 0 of ``ue`` is the typical UE.
    """
    bs_pts = np.asarray(bs.points, dtype=float).reshape(-1, 2)
    ue_pts = np.asarray(ue.points, dtype=float).reshape(-1, 2)
    n_bs, n_ue = bs_pts.shape[0], ue_pts.shape[0]
    if n_bs == 0:
        raise ConfigurationError("no BSs in the window")
    if n_ue == 0:
        raise ConfigurationError("UE pattern must contain the typical UE")
    h = model.height_diff_km
    los_prob = model.los_prob

    serving = np.empty(n_ue, dtype=np.int64)
    serving_gain = np.empty(n_ue)

    # typical UE: every link drawn
    r_typ = toroidal_distance_2d(bs_pts, ue_pts[0][None, :], window)
    w_typ = np.asarray(dist_3d(r_typ, h))
    los_typ = rng.random(n_bs) < los_prob(w_typ)
    g_typ = model.gain(w_typ, los_typ)
    serving[0] = associate(g_typ[None, :], w_typ[None, :])[0]
    serving_gain[0] = g_typ[serving[0]]

    reach = np.full(n_ue, np.inf)
    los_keys = np.zeros(0, dtype=np.int64)
    others = np.mod(ue_pts[1:], window.side_km) % window.side_km
    n_oth = n_ue - 1
    if n_oth:
        side = window.side_km
        tree = cKDTree(np.mod(bs_pts, side) % side, boxsize=side)

        # stage 1: the k nearest BSs of every UE
        k1 = min(NEAREST_FIRST, n_bs)
        i_k = tree.query(others, k=k1)[1].reshape(n_oth, k1)
        # lengths from the same routine as every later lookup, not the tree's
        w_k = np.asarray(dist_3d(toroidal_distance_2d(bs_pts[i_k], ue_pts[1:, None], window), h))
        order = np.argsort(w_k, axis=1, kind="stable")
        i_k, w_k = np.take_along_axis(i_k, order, 1), np.take_along_axis(w_k, order, 1)
        los_k = rng.random(w_k.shape) < los_prob(w_k)
        g_k = model.gain(w_k, los_k)
        j = np.argmax(g_k, axis=1)  # distances ascend, so ties go to the nearer BS
        rows = np.arange(n_oth)
        best_b, best_g, best_w = i_k[rows, j], g_k[rows, j], w_k[rows, j]
        lu, lb, lw = [rows[:, None].repeat(k1, 1)[los_k]], [i_k[los_k]], [w_k[los_k]]
        lu.append(rows[:0]), lb.append(rows[:0]), lw.append(w_k[:0, 0])

        # stage 2: a farther BS can only win through a LoS link reaching past w_kth
        w_kth = w_k[:, -1]
        reach_o = np.maximum(model.los_reach(best_g), w_kth) if k1 < n_bs else w_kth
        reach[1:] = reach_o
        need = np.flatnonzero(reach_o > w_kth)
        tau = los_prob.sup_beyond(los_cutoff_km)
        cutoff = los_cutoff_km if tau <= _MAX_THINNING_TAU else np.inf

        if need.size:
            w_near = np.minimum(reach_o[need], cutoff)
            sel = w_near > w_kth[need]
            nu = need[sel]
            r_near = np.sqrt(np.maximum(w_near[sel] ** 2 - h * h, 0.0))
            r_near = np.minimum(r_near * (1 + 1e-9), window.max_distance_km * (1 + 1e-9))
            cu, cb = _neighbours_within(tree, others, nu, r_near, n_bs)
            if cu.size:
                cw = np.asarray(dist_3d(toroidal_distance_2d(bs_pts[cb], ue_pts[1:][cu], window), h))
                keep = ~np.any(cb[:, None] == i_k[cu], axis=1) & (cw <= np.minimum(reach_o[cu], cutoff))
                cu, cb, cw = cu[keep], cb[keep], cw[keep]
                hit = rng.random(cw.size) < los_prob(cw)
                lu.append(cu[hit]), lb.append(cb[hit]), lw.append(cw[hit])

        far = need[reach_o[need] > np.maximum(cutoff, w_kth[need])] if np.isfinite(cutoff) else need[:0]
        if far.size and tau > 0:
            n_pairs = n_bs * far.size
            k = rng.binomial(n_pairs, tau)
            flat = rng.choice(n_pairs, size=k, replace=False) if k else np.zeros(0, dtype=np.int64)
            fb, fu = flat // far.size, far[flat % far.size]
            fw = np.asarray(dist_3d(toroidal_distance_2d(bs_pts[fb], ue_pts[1:][fu], window), h))
            accept = rng.random(k) * tau < los_prob(fw)
            first = np.any(fb[:, None] == i_k[fu], axis=1)
            hit = ~first & (fw > cutoff) & (fw <= reach_o[fu]) & accept
            lu.append(fu[hit]), lb.append(fb[hit]), lw.append(fw[hit])

        los_keys = np.sort(np.concatenate(lb) * n_ue + (np.concatenate(lu) + 1))

        # stage-1 links are already in best_*; only later LoS hits can improve on them
        serving[1:] = best_b
        serving_gain[1:] = best_g
        lu, lb, lw = np.concatenate(lu[1:]), np.concatenate(lb[1:]), np.concatenate(lw[1:])
        if lu.size:
            lg = model.gain(lw, True)
            order = np.lexsort((lb, lw, -lg, lu))
            lu, lb, lg, lw = lu[order], lb[order], lg[order], lw[order]
            head = np.ones(lu.size, dtype=bool)
            head[1:] = lu[1:] != lu[:-1]
            bu, bb, bg, bw = lu[head], lb[head], lg[head], lw[head]
            better = (bg > best_g[bu]) | ((bg == best_g[bu]) & (bw < best_w[bu]))
            serving[1:][bu[better]] = bb[better]
            serving_gain[1:][bu[better]] = bg[better]

    return Association(serving, serving_gain, w_typ, los_typ, g_typ, reach, los_keys,
                       bs_pts, ue_pts, window, model)
