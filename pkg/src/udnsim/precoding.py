"""Zero-forcing precoding and the typical UE's downlink SINR."""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

# reciprocal condition number below which a Gram matrix counts as singular
_RCOND = 1e-12


@dataclass
class PrecoderSet:
    """Unit-norm ZF columns ``f[..., :, k]`` and the equal per-UE power split."""

    f: np.ndarray
    power: np.ndarray


def zf_directions(h_bar: np.ndarray) -> np.ndarray:
    """Normalised columns of ``H (H^H H)^-1`` for stacked ``(..., M, K)`` estimates."""
    h_bar = np.asarray(h_bar)
    if h_bar.ndim < 2:
        raise ValueError("estimates must be stacked as (..., M, K)")
    m, k = h_bar.shape[-2:]
    if k > m:
        raise NumericalError(f"cannot zero-force {k} streams with {m} antennas")
    # directions do not depend on column scales, so equalise them first
    col = np.linalg.norm(h_bar, axis=-2, keepdims=True)
    if np.any(col == 0):
        raise NumericalError("zero estimated channel")
    h_bar = h_bar / col
    hh = np.conj(np.swapaxes(h_bar, -1, -2))
    if k == 1:
        f = h_bar
    else:
        gram = hh @ h_bar
        ev = np.linalg.eigvalsh(gram)
        if np.any(ev[..., 0] <= _RCOND * ev[..., -1]):
            raise NumericalError("rank-deficient estimated channel matrix")
        # H G^-1 = (G^-1 H^H)^H since G is Hermitian
        f = np.conj(np.swapaxes(np.linalg.solve(gram, hh), -1, -2))
    norms = np.linalg.norm(f, axis=-2, keepdims=True)
    if np.any(norms == 0):
        raise NumericalError("zero estimated channel")
    return f / norms


def zf_precoders(estimates, p_total: float) -> PrecoderSet:
    """ZF precoders for one cell from its list (or ``(M, K)`` array) of estimates."""
    h_bar = np.asarray(estimates)
    if h_bar.ndim == 1:
        h_bar = h_bar[:, None]
    elif isinstance(estimates, (list, tuple)):
        h_bar = np.stack([np.asarray(e) for e in estimates], axis=-1)
    k = h_bar.shape[-1]
    return PrecoderSet(zf_directions(h_bar), np.full(k, p_total / k))


@dataclass
class SinrBreakdown:
    signal: float
    self_interference: float
    intra_cell: float
    inter_cell: float
    noise: float

    @property
    def interference(self) -> float:
        return self.self_interference + self.intra_cell + self.inter_cell

    @property
    def sinr(self) -> float:
        return self.signal / (self.interference + self.noise)


def typical_ue_sinr(h_bar, h_err, f_serving, k_typ: int, p_serving: float,
                    interferers=(), noise: float = 0.0) -> SinrBreakdown:
    """Downlink SINR of the typical UE.

    Parameters
    ----------
    h_bar, h_err : array, shape (M,)
        Serving BS's estimate of the typical UE's channel and its error.
    f_serving : array, shape (M, K1)
        Unit-norm precoders of the serving cell; column ``k_typ`` is the typical UE's.
    p_serving : float
        Per-UE power of the serving cell.
    interferers : iterable of (h, f, p)
        Batches of other active cells: ``h`` (n, M) true channels from each
        cell to the typical UE, ``f`` (n, M, K) their precoders, ``p`` (n,)
        their per-UE powers.
    noise : float
        Receiver noise power in W.

    The serving cell's other streams leak only through the estimation
    error because the precoders null ``h_bar``; that leakage is reported
    as ``intra_cell``.
    """
    f_serving = np.asarray(f_serving)
    f1 = f_serving[:, k_typ]
    signal = p_serving * abs(np.vdot(h_bar, f1)) ** 2
    self_int = p_serving * abs(np.vdot(h_err, f1)) ** 2
    h_true = h_bar + h_err
    leak = np.abs(np.conj(h_true) @ np.delete(f_serving, k_typ, axis=1)) ** 2
    intra = p_serving * leak.sum()
    inter = 0.0
    for h, f, p in interferers:
        h = np.asarray(h)
        if h.shape[0] == 0:
            continue
        g = np.einsum("nm,nmk->nk", np.conj(h), f)
        inter += float(np.sum(np.asarray(p) * np.sum(np.abs(g) ** 2, axis=1)))
    return SinrBreakdown(float(signal), float(self_int), float(intra), inter, float(noise))
