"""Discrete Radon and 2-d ray transforms with exact-transpose adjoints.

The forward operators are ray driven: each sinogram sample integrates the
bilinearly interpolated field along the line x(t) = r * theta + t *
theta_perp, theta = (cos phi, sin phi), with a composite midpoint rule over
the full chord t in [-extent*sqrt(2), extent*sqrt(2)].  Points outside the
grid contribute zero.  The sampling is assembled once per geometry into a
sparse matrix, and the adjoint applies its literal transpose, so the
adjoint identity holds at machine precision.

The Radon transform acts channel-wise (M = m); the ray transform contracts
the two channels of a plane vector field against theta_perp (M = 1), which
makes it blind to gradient parts of the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
import scipy.sparse

from .grid import Grid, Sinogram, VectorField, canonical_angles, canonical_offsets

# Cap on elements per interpolation batch; keeps transient arrays small
# while leaving few enough batches for numpy to dominate the Python loop.
_BATCH_ELEMS = 2_000_000


@dataclass(frozen=True)
class Geometry:
    """Sampling geometry shared by a grid and its sinograms."""

    grid: Grid
    offsets: np.ndarray
    angles: np.ndarray
    step: float
    # Sparse system matrix and its transpose, built lazily on first use and
    # reused afterwards; an optimizer evaluates hundreds of projections on
    # one fixed geometry.
    _matrices: tuple | None = dataclass_field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.float64)
        angles = np.asarray(self.angles, dtype=np.float64)
        if offsets.ndim != 1 or offsets.size < 2:
            raise ValueError("geometry needs at least 2 offsets")
        if angles.ndim != 1 or angles.size < 1:
            raise ValueError("geometry needs at least 1 angle")
        if not (0 < self.step <= self.grid.h + 1e-12):
            raise ValueError(
                f"quadrature step must lie in (0, h], got step={self.step}, h={self.grid.h}"
            )
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "angles", angles)

    @property
    def n_r(self) -> int:
        return self.offsets.size

    @property
    def n_phi(self) -> int:
        return self.angles.size

    @property
    def dr(self) -> float:
        return float(self.offsets[1] - self.offsets[0])

    @property
    def dphi(self) -> float:
        return np.pi / self.n_phi


def make_geometry(
    grid: Grid,
    n_r: int | None = None,
    n_phi: int = 180,
    step: float | None = None,
) -> Geometry:
    """Canonical geometry for a grid.

    Defaults: n_r = ceil(H * sqrt(2)) + 2 offsets over the diagonal,
    n_phi = 180 angles over [0, pi), quadrature step h / 2.
    """
    if n_r is None:
        n_r = int(math.ceil(grid.H * math.sqrt(2.0))) + 2
    if step is None:
        step = grid.h / 2.0
    return Geometry(grid, canonical_offsets(grid.extent, n_r), canonical_angles(n_phi), step)


def _t_nodes(geom: Geometry) -> tuple[np.ndarray, float]:
    """Midpoint nodes over the full chord and their exact spacing.

    The spacing divides the chord length exactly, so it can be slightly
    finer than geom.step but never coarser.  Nodes are built symmetric about
    0 bit for bit; that makes each discrete transform even, i.e. the sample
    at (-r, phi + pi) sums exactly the points of the sample at (r, phi).
    """
    half = geom.grid.extent * math.sqrt(2.0)
    n_t = int(math.ceil(2.0 * half / geom.step))
    dt = 2.0 * half / n_t
    return (np.arange(n_t) - (n_t - 1) / 2.0) * dt, dt


def _corner_batches(geom: Geometry):
    """Yield per-angle-batch interpolation data.

    Each item is (angle_slice, corners) where corners is a list of four
    (rows, cols, weights, mask) arrays of shape (k, n_r, n_t).  The weights
    already carry the quadrature spacing; the batches bound the size of the
    transient arrays while the system matrix is assembled.
    """
    grid = geom.grid
    t, dt = _t_nodes(geom)
    r = geom.offsets
    n_batch = max(1, _BATCH_ELEMS // max(1, r.size * t.size))
    for start in range(0, geom.n_phi, n_batch):
        sl = slice(start, min(start + n_batch, geom.n_phi))
        phis = geom.angles[sl]
        ct = np.cos(phis)[:, None, None]
        st = np.sin(phis)[:, None, None]
        rr = r[None, :, None]
        tt = t[None, None, :]
        x = rr * ct - tt * st
        y = rr * st + tt * ct
        fi = (grid.extent - y) / grid.h - 0.5
        fj = (x + grid.extent) / grid.h - 0.5
        i0 = np.floor(fi).astype(np.int64)
        j0 = np.floor(fj).astype(np.int64)
        ai = fi - i0
        aj = fj - j0
        corners = []
        for di, dj, w in (
            (0, 0, dt * (1.0 - ai) * (1.0 - aj)),
            (0, 1, dt * (1.0 - ai) * aj),
            (1, 0, dt * ai * (1.0 - aj)),
            (1, 1, dt * ai * aj),
        ):
            ii = i0 + di
            jj = j0 + dj
            mask = (ii >= 0) & (ii < grid.H) & (jj >= 0) & (jj < grid.W)
            corners.append((ii, jj, w, mask))
        yield sl, corners


def _system_matrices(geom: Geometry) -> tuple:
    """Sparse scalar Radon matrix (n_r * n_phi, H * W) and its transpose.

    Row i_r * n_phi + j_phi accumulates the bilinear corner weights of all
    quadrature points on line (r_i, phi_j); one matrix realizes the forward
    on each channel, and its literal transpose is the adjoint.
    """
    if geom._matrices is None:
        grid = geom.grid
        n_cols = grid.H * grid.W
        parts = []
        for sl, corners in _corner_batches(geom):
            n_t = corners[0][0].shape[2]
            phi_idx = np.arange(sl.start, sl.stop)
            rows = np.broadcast_to(
                (geom.n_phi * np.arange(geom.n_r)[None, :, None] + phi_idx[:, None, None]),
                corners[0][0].shape,
            )
            for ii, jj, w, mask in corners:
                keep = mask.ravel()
                cols = (ii * grid.W + jj).ravel()[keep]
                parts.append((rows.ravel()[keep], cols, w.ravel()[keep]))
        rows = np.concatenate([p[0] for p in parts])
        cols = np.concatenate([p[1] for p in parts])
        vals = np.concatenate([p[2] for p in parts])
        mat = scipy.sparse.coo_matrix(
            (vals, (rows, cols)), shape=(geom.n_r * geom.n_phi, n_cols)
        ).tocsr()
        object.__setattr__(geom, "_matrices", (mat, mat.T.tocsr()))
    return geom._matrices


def _check_field(field: VectorField, geom: Geometry) -> None:
    if field.grid != geom.grid:
        raise ValueError("field grid does not match the geometry grid")


def _check_sino(sino: Sinogram, geom: Geometry) -> None:
    if sino.n_r != geom.n_r or sino.n_phi != geom.n_phi:
        raise ValueError(
            f"sinogram shape ({sino.n_r}, {sino.n_phi}) does not match geometry "
            f"({geom.n_r}, {geom.n_phi})"
        )
    if abs(sino.extent - geom.grid.extent) > 1e-12 * max(1.0, geom.grid.extent):
        raise ValueError("sinogram extent does not match the geometry grid")


def radon_forward(field: VectorField, geom: Geometry) -> Sinogram:
    """Channel-wise line integrals of a field, one sinogram channel per m."""
    _check_field(field, geom)
    grid = geom.grid
    mat, _ = _system_matrices(geom)
    flat = field.data.reshape(grid.H * grid.W, field.m)
    out = np.asarray(mat @ flat).reshape(geom.n_r, geom.n_phi, field.m)
    return Sinogram(geom.offsets, geom.angles, out, grid.extent)


def radon_adjoint(sino: Sinogram, geom: Geometry) -> VectorField:
    """Exact transpose of radon_forward, one field channel per M."""
    _check_sino(sino, geom)
    grid = geom.grid
    m = sino.m
    _, mat_t = _system_matrices(geom)
    flat = np.asarray(mat_t @ sino.data.reshape(geom.n_r * geom.n_phi, m))
    return VectorField(grid, flat.reshape(grid.H, grid.W, m))


def ray_forward(field: VectorField, geom: Geometry) -> Sinogram:
    """2-d ray transform: Radon of a plane vector field contracted with theta_perp."""
    if field.m != 2:
        raise ValueError(f"ray transform needs a 2-channel field, got m={field.m}")
    full = radon_forward(field, geom)
    st = np.sin(geom.angles)[None, :]
    ct = np.cos(geom.angles)[None, :]
    data = -st * full.data[:, :, 0] + ct * full.data[:, :, 1]
    return Sinogram(geom.offsets, geom.angles, data[:, :, None], geom.grid.extent)


def ray_adjoint(sino: Sinogram, geom: Geometry) -> VectorField:
    """Exact transpose of ray_forward."""
    if sino.m != 1:
        raise ValueError(f"ray adjoint needs a 1-channel sinogram, got M={sino.m}")
    _check_sino(sino, geom)
    st = np.sin(geom.angles)[None, :]
    ct = np.cos(geom.angles)[None, :]
    lifted = np.stack([-st * sino.data[:, :, 0], ct * sino.data[:, :, 0]], axis=-1)
    return radon_adjoint(Sinogram(geom.offsets, geom.angles, lifted, sino.extent), geom)


def radon_continuity_constant(radius: float, p: float, n: int = 2) -> float:
    """Norm bound constant: ||R w||_p^p <= C * ||w||_p^p for fields in a ball.

    C = (vol of the (n-1)-ball of the given radius)^(p-1) times the surface
    of the unit (n-1)-sphere.  For n = 2 this is (2*radius)^(p-1) * 2*pi.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    ball = math.pi ** ((n - 1) / 2.0) / math.gamma((n - 1) / 2.0 + 1.0) * radius ** (n - 1)
    sphere = n * math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
    return ball ** (p - 1.0) * sphere
