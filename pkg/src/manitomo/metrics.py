"""Pointwise distances on the value manifolds and the mollifier stencil.

Supported value manifolds: plain R^m (Euclidean distance), the unit circle
(geodesic arc length, either between unit vectors or between lifted angles),
and the annulus ``eps <= |x| <= r_max`` with a product metric that combines
the direction geodesic with a weighted length difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METRIC_KINDS = ("euclidean", "sphere", "angle", "product")

MOLLIFIER_RADII = (1, 2, 3)


@dataclass(frozen=True)
class MetricSpec:
    """Choice of value metric plus its parameters.

    gamma weights the length term of the product metric; eps and r_max bound
    the annulus.  They are ignored by the other kinds.
    """

    kind: str = "euclidean"
    gamma: float = 1.0
    eps: float = 1e-3
    r_max: float = 1.0

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}, expected one of {METRIC_KINDS}")
        if self.kind == "product":
            if not (0.0 < self.eps < self.r_max):
                raise ValueError(
                    f"product metric needs 0 < eps < r_max, got eps={self.eps}, r_max={self.r_max}"
                )
            if self.gamma < 0:
                raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


def wrap_angle(x: np.ndarray | float) -> np.ndarray | float:
    """Wrap to (-pi, pi], ties at odd multiples of pi resolved to +pi."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=np.float64), 2.0 * np.pi)


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean norm of a - b over the last axis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.linalg.norm(a - b, axis=-1)


def circle_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Geodesic arc length in [0, pi] between the directions of plane vectors.

    Computed as atan2(|a x b|, a . b), which equals the arccos of the
    clamped normalized dot product but is exact for coincident and
    antipodal inputs, where the arccos form carries square-root-of-epsilon
    noise.  Lengths cancel; exact zero vectors are rejected.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != 2 or b.shape[-1] != 2:
        raise ValueError("circle_distance is defined on plane vectors")
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    if np.any(na < 1e-300) or np.any(nb < 1e-300):
        raise ValueError("circle_distance is undefined for zero vectors")
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    return np.arctan2(np.abs(cross), dot)


def angle_distance(u1: np.ndarray | float, u2: np.ndarray | float) -> np.ndarray | float:
    """Arc length between angles in radians, |wrap(u1 - u2)| in [0, pi]."""
    d = np.asarray(u1, dtype=np.float64) - np.asarray(u2, dtype=np.float64)
    return np.abs(wrap_angle(d))


def _check_annulus(name: str, r: np.ndarray, eps: float, r_max: float) -> None:
    slack = 1e-9 * max(1.0, r_max)
    if np.any(r < eps - slack) or np.any(r > r_max + slack):
        raise ValueError(
            f"{name} has length outside the annulus [{eps}, {r_max}]"
        )


def angle_length_distance(
    x1: np.ndarray,
    x2: np.ndarray,
    p: float,
    gamma: float,
    eps: float,
    r_max: float,
) -> np.ndarray:
    """Product metric on the annulus eps <= |x| <= r_max in R^2.

    d(x1, x2) = (arc(dir x1, dir x2)^p + gamma * ||x1| - |x2||^p)^(1/p)
    with arc the circle geodesic between the directions.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if not (0.0 < eps < r_max):
        raise ValueError(f"need 0 < eps < r_max, got eps={eps}, r_max={r_max}")
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape[-1] != 2 or x2.shape[-1] != 2:
        raise ValueError("product metric is defined on R^2 values")
    r1 = np.linalg.norm(x1, axis=-1)
    r2 = np.linalg.norm(x2, axis=-1)
    _check_annulus("x1", r1, eps, r_max)
    _check_annulus("x2", r2, eps, r_max)
    arc = circle_distance(x1, x2)
    return (arc**p + gamma * np.abs(r1 - r2) ** p) ** (1.0 / p)


@dataclass(frozen=True)
class Mollifier:
    """Discrete mollifier on a (2n+1)^2 stencil of pixel offsets.

    weights[n_rho + zi, n_rho + zj] is the weight of offset z = (zi, zj).
    The weights are a truncated Gaussian, radially symmetric and
    non-increasing, normalized so that sum(weights) * h^2 = 1.  The center
    weight participates in the mass but the z = 0 term is excluded from the
    regularizer double sums.
    """

    n_rho: int
    h: float
    sigma: float
    weights: np.ndarray

    def weight(self, zi: int, zj: int) -> float:
        """Weight of integer offset (zi, zj); 0 outside the stencil."""
        n = self.n_rho
        if abs(zi) > n or abs(zj) > n:
            return 0.0
        return float(self.weights[n + zi, n + zj])

    @property
    def smallest_weight(self) -> float:
        """Smallest nonzero stencil weight (attained at the corners)."""
        w = self.weights[self.weights > 0]
        return float(w.min())

    @property
    def largest_weight(self) -> float:
        """Largest stencil weight (the center)."""
        return float(self.weights.max())


def make_mollifier(n_rho: int, h: float, sigma: float | None = None) -> Mollifier:
    """Build the truncated-Gaussian stencil for a given pixel size.

    Parameters
    ----------
    n_rho : stencil radius in pixels, one of 1, 2, 3.
    h : pixel side length of the grid the stencil will be used on.
    sigma : Gaussian width in pixel units, default n_rho / 2.
    """
    if n_rho not in MOLLIFIER_RADII:
        raise ValueError(f"n_rho must be one of {MOLLIFIER_RADII}, got {n_rho}")
    if not (h > 0 and np.isfinite(h)):
        raise ValueError(f"h must be positive and finite, got {h}")
    if sigma is None:
        sigma = n_rho / 2.0
    if not (sigma > 0 and np.isfinite(sigma)):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    z = np.arange(-n_rho, n_rho + 1)
    zi, zj = np.meshgrid(z, z, indexing="ij")
    weights = np.exp(-(zi**2 + zj**2) / (2.0 * sigma**2))
    weights /= weights.sum() * h * h
    return Mollifier(int(n_rho), float(h), float(sigma), weights)
