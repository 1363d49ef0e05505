"""Uplink training: Rayleigh channels and their MMSE estimates."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

MMSE_STANDARD = "standard"
MMSE_INTERFERENCE_ONLY = "interference-only"


def complex_normal(shape, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    z *= np.sqrt(0.5)
    return z.view(np.complex128)[..., 0]


@dataclass
class ChannelVector:
    entries: np.ndarray
    gain: float
    is_los: bool


def draw_channel(gain, m: int, rng: np.random.Generator, is_los: bool = False) -> ChannelVector:
    """``sqrt(gain) * w`` with ``w`` an M-vector of i.i.d. CN(0, 1) fading (identity covariance)."""
    if m < 1:
        raise DomainError(f"antenna count must be >= 1, got {m}")
    return ChannelVector(np.sqrt(gain) * complex_normal(m, rng), float(gain), bool(is_los))


def draw_channels(gains, m: int, rng: np.random.Generator) -> np.ndarray:
    """Channels for an array of gains; the antenna axis is appended last."""
    gains = np.asarray(gains, dtype=float)
    return np.sqrt(gains)[..., None] * complex_normal(gains.shape + (m,), rng)


def uplink_tx_power(serving_gain, eps: float, p_u: float):
    """Fractional path loss compensation ``p_u * serving_gain**-eps``."""
    if not 0.0 <= eps <= 1.0:
        raise ConfigurationError(f"compensation fraction must lie in [0, 1], got {eps}")
    serving_gain = np.asarray(serving_gain, dtype=float)
    if np.any(serving_gain <= 0):
        raise DomainError("serving gain must be positive")
    out = p_u * serving_gain ** (-eps)
    return float(out) if out.ndim == 0 else out


def observe_pilot(channels, powers, noise_var, rng: np.random.Generator) -> np.ndarray:
    """Received pilot at a BS after correlation with the pilot sequence.

    Parameters
    ----------
    channels : array, shape (..., n, M)
        Channels from the observing BS to every UE sending this pilot;
        by convention entry 0 along ``n`` is the UE being estimated.
    powers : array, shape (..., n)
        Uplink transmit powers of those UEs in W.
    noise_var : float or array, shape (...)
        Per-entry noise variance in W.  Contamination that is not
        represented by explicit channels may be folded in here.

    Returns
    -------
    np.ndarray, shape (..., M)
    """
    channels = np.asarray(channels)
    if channels.ndim == 1:
        channels = channels[None, :]
    powers = np.asarray(powers, dtype=float)
    if powers.shape != channels.shape[:-1]:
        raise ValueError("one power per contributing channel is required")
    y = np.einsum("...n,...nm->...m", np.sqrt(powers), channels)
    noise_var = np.asarray(noise_var, dtype=float)
    # noise is always drawn so the stream position does not depend on its variance
    return y + np.sqrt(noise_var)[..., None] * complex_normal(y.shape, rng)


@dataclass
class EstimatedChannel:
    estimate: np.ndarray
    error: np.ndarray


def mmse_coefficient(serving_power, serving_gain, contamination, sigma2,
                     denominator: str = MMSE_STANDARD):
    """Scalar MMSE weight for i.i.d. Rayleigh channels.

    ``contamination`` is the received power of the other same-pilot UEs,
    ``sum_l P_l zeta_l``.  The standard weight includes the UE's own
    received pilot power in the denominator; ``"interference-only"`` drops it.
    """
    own = np.asarray(serving_power) * np.asarray(serving_gain)
    if denominator == MMSE_STANDARD:
        den = own + contamination + sigma2
    elif denominator == MMSE_INTERFERENCE_ONLY:
        den = contamination + sigma2
    else:
        raise ConfigurationError(f"unknown MMSE denominator mode {denominator!r}")
    return np.sqrt(serving_power) * np.asarray(serving_gain) / den


def mmse_estimate(y, h_true, serving_power, serving_gain, contamination, sigma2,
                  denominator: str = MMSE_STANDARD) -> EstimatedChannel:
    """MMSE channel estimate and its error ``h - h_bar``; broadcasts over leading axes."""
    c = np.asarray(mmse_coefficient(serving_power, serving_gain, contamination, sigma2, denominator))
    est = c[..., None] * y if c.ndim else c * y
    return EstimatedChannel(est, h_true - est)
