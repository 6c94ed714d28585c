"""Synthetic test images, measurement noise, and reconstruction quality.

All phantoms are deterministic functions of the grid; noise and random
starting points draw from numpy's PCG64 generator seeded through
SeedSequence((seed, stream)), so runs reproduce bit-exactly across
platforms.  Stream 0 is measurement noise, stream 1 the init perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import AngleField, Grid, Sinogram, VectorField, make_grid, pixel_centers

ANGLE_PHANTOMS = ("two-region", "four-region")

VECTOR_PHANTOMS = ("length-jump", "direction-jump", "curl")

NOISE_STREAM = 0
INIT_STREAM = 1


@dataclass(frozen=True)
class NoiseSpec:
    """Additive i.i.d. Gaussian noise with the given variance."""

    var: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.var < 0:
            raise ValueError(f"noise variance must be nonnegative, got {self.var}")


def rng_for(seed: int, stream: int = NOISE_STREAM) -> np.random.Generator:
    """The package-wide reproducible generator (PCG64 via SeedSequence)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed), int(stream)))))


def angle_phantom(kind: str, n: int, extent: float = 1.0) -> AngleField:
    """Piecewise constant 1-normalized angle images.

    two-region: left half 0.2, right half 0.7 (half the area each).
    four-region: quadrants, clockwise from top-left 0.05, 0.3, 0.8, 0.55
    (a quarter each).  Region areas hit the fractions up to the center
    row/column for odd n.
    """
    grid = make_grid(n, extent)
    data = np.empty((n, n))
    half = n // 2
    if kind == "two-region":
        data[:, :half] = 0.2
        data[:, half:] = 0.7
    elif kind == "four-region":
        data[:half, :half] = 0.05
        data[:half, half:] = 0.3
        data[half:, :half] = 0.55
        data[half:, half:] = 0.8
    else:
        raise ValueError(f"unknown angle phantom {kind!r}, expected one of {ANGLE_PHANTOMS}")
    return AngleField(grid, data, normalized=True)


def vector_phantom(kind: str, n: int, extent: float = 1.0) -> VectorField:
    """Plane vector field images with a known discontinuity structure.

    length-jump: direction jumps between 0.3*pi (upper half) and 1.2*pi
    (lower half); lengths ramp linearly left to right from exactly 0.01 to
    exactly 0.1 at the pixel centers.
    direction-jump: unit length everywhere, direction pi/6 in the upper and
    2*pi/3 in the lower half.
    curl: unit length, counterclockwise tangential around the grid center;
    every vector is exactly orthogonal to its position vector.
    """
    grid = make_grid(n, extent)
    if kind == "length-jump":
        upper = np.arange(n) < n // 2
        ang = np.where(upper, 0.3 * np.pi, 1.2 * np.pi)[:, None] * np.ones((1, n))
        length = (0.01 + 0.09 * np.arange(n) / (n - 1))[None, :] * np.ones((n, 1))
        data = np.stack([length * np.cos(ang), length * np.sin(ang)], axis=-1)
    elif kind == "direction-jump":
        upper = np.arange(n) < n // 2
        ang = np.where(upper, np.pi / 6.0, 2.0 * np.pi / 3.0)[:, None] * np.ones((1, n))
        data = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    elif kind == "curl":
        xy = pixel_centers(grid)
        r = np.linalg.norm(xy, axis=-1)
        # even n keeps all pixel centers off the origin; guard the odd case
        r = np.where(r == 0.0, 1.0, r)
        data = np.stack([-xy[..., 1] / r, xy[..., 0] / r], axis=-1)
    else:
        raise ValueError(f"unknown vector phantom {kind!r}, expected one of {VECTOR_PHANTOMS}")
    return VectorField(grid, data)


def add_noise(sino: Sinogram, spec: NoiseSpec) -> Sinogram:
    """Add i.i.d. N(0, var) to every sinogram entry."""
    rng = rng_for(spec.seed, NOISE_STREAM)
    noisy = sino.data + np.sqrt(spec.var) * rng.standard_normal(sino.data.shape)
    return Sinogram(sino.offsets, sino.angles, noisy, sino.extent)


def snr(truth: np.ndarray | VectorField | AngleField, recon) -> float:
    """Signal-to-noise ratio 20*log10(|truth| / |truth - recon|) in dB.

    Identical inputs give +inf; an all-zero truth is rejected.  Angle
    fields are compared through their unit vectors so the value is
    insensitive to whole turns.
    """
    t = _snr_data(truth)
    r = _snr_data(recon)
    if t.shape != r.shape:
        raise ValueError(f"shape mismatch: truth {t.shape} vs reconstruction {r.shape}")
    tn = float(np.linalg.norm(t))
    if tn == 0.0:
        raise ValueError("snr is undefined for an all-zero truth")
    en = float(np.linalg.norm(t - r))
    if en == 0.0:
        return float("inf")
    return 20.0 * np.log10(tn / en)


def _snr_data(x) -> np.ndarray:
    if isinstance(x, AngleField):
        return x.to_vector_field().data
    if isinstance(x, VectorField):
        return x.data
    return np.asarray(x, dtype=np.float64)
