"""Point processes on a square wrap-around window.

The window is the square ``[0, side) x [0, side)`` in km with periodic
boundaries, so every point sees the same (statistically) infinite plane.
The typical UE sits at the window centre.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Window:
    side_km: float = 4.0
    wraparound: bool = True

    def __post_init__(self):
        if not self.side_km > 0:
            raise ConfigurationError(f"window side must be positive, got {self.side_km}")
        if not self.wraparound:
            raise ConfigurationError("only wrap-around windows are supported")

    @property
    def area_km2(self) -> float:
        return self.side_km * self.side_km

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * self.side_km, 0.5 * self.side_km])

    @property
    def max_distance_km(self) -> float:
        """Largest toroidal distance between two points of the window."""
        return self.side_km * np.sqrt(2.0) / 2.0


@dataclass
class PointPattern:
    points: np.ndarray  # (n, 2), km
    density_km2: float

    def __len__(self):
        return self.points.shape[0]


def sample_hppp(density: float, window: Window, rng: np.random.Generator) -> PointPattern:
    """Sample a homogeneous Poisson point process on ``window``.

    The count is Poisson with mean ``density * side**2`` and the positions
    are i.i.d. uniform on the window.
    """
    if density < 0 or not np.isfinite(density):
        raise ConfigurationError(f"point density must be a finite non-negative number, got {density}")
    n = rng.poisson(density * window.area_km2)
    points = rng.uniform(0.0, window.side_km, size=(n, 2))
    return PointPattern(points=points, density_km2=float(density))


def place_typical_ue(pattern: PointPattern, window: Window) -> PointPattern:
    """Prepend the typical UE at the window centre.

    This adds a point rather than relabelling one (Palm conditioning on a
    Poisson process), so the returned pattern has ``len(pattern) + 1``
    points and index 0 is the typical UE.
    """
    points = np.vstack([window.center[None, :], pattern.points.reshape(-1, 2)])
    return PointPattern(points=points, density_km2=pattern.density_km2)


def wrapped_delta(a, b, side_km: float) -> np.ndarray:
    """Shortest displacement ``b - a`` on the torus, componentwise."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    return d - side_km * np.round(d / side_km)


def toroidal_distance_2d(a, b, window: Window):
    """Distance between ``a`` and ``b`` under wrap-around, broadcasting over leading axes.

    Equivalent to the minimum over the nine periodic images of ``b``.
    """
    d = wrapped_delta(a, b, window.side_km)
    # plain IEEE arithmetic, so equal inputs give equal bits in any array layout
    out = np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])
    return float(out) if out.ndim == 0 else out


def pairwise_distances(a: np.ndarray, b: np.ndarray, window: Window) -> np.ndarray:
    """Toroidal distance matrix of shape ``(len(a), len(b))``."""
    return toroidal_distance_2d(a[:, None, :], b[None, :, :], window)
