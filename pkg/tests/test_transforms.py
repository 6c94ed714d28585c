"""Radon and ray transforms: geometry, adjointness, physics, covariance."""

import math

import numpy as np
import pytest

from manitomo import (
    Geometry,
    VectorField,
    make_geometry,
    make_grid,
    make_sinogram,
    pixel_centers,
    radon_adjoint,
    radon_continuity_constant,
    radon_forward,
    ray_adjoint,
    ray_forward,
)
from manitomo.grid import canonical_angles, canonical_offsets
from manitomo.reference import line_integral_quadrature

SEED = 31415


def _gaussian_bump_field(grid, sigma=0.25):
    xy = pixel_centers(grid)
    f = np.exp(-(xy[..., 0] ** 2 + xy[..., 1] ** 2) / (2.0 * sigma * sigma))
    return VectorField(grid, f[..., None])


def _potential_gradient_field(grid, sigma=0.25):
    # gradient of the Gaussian potential psi, effectively zero at the boundary
    xy = pixel_centers(grid)
    psi = np.exp(-(xy[..., 0] ** 2 + xy[..., 1] ** 2) / (2.0 * sigma * sigma))
    gx = -xy[..., 0] / sigma**2 * psi
    gy = -xy[..., 1] / sigma**2 * psi
    return VectorField(grid, np.stack([gx, gy], axis=-1))


def _sino_norm_p(sino, p):
    rn = np.linalg.norm(sino.data, axis=-1)
    return sino.dr * sino.dphi * float(np.sum(rn**p))


def _field_norm_p(field, p):
    rn = np.linalg.norm(field.data, axis=-1)
    return field.grid.h**2 * float(np.sum(rn**p))


def test_make_geometry_defaults():
    grid = make_grid(32, 1.0)
    geom = make_geometry(grid)
    assert geom.n_r == math.ceil(32 * math.sqrt(2.0)) + 2
    assert geom.n_phi == 180
    assert geom.step == grid.h / 2.0
    np.testing.assert_allclose(geom.offsets, canonical_offsets(1.0, geom.n_r))
    np.testing.assert_allclose(geom.angles, canonical_angles(180))


def test_geometry_validation():
    grid = make_grid(8, 1.0)
    offs = canonical_offsets(1.0, 13)
    angs = canonical_angles(6)
    with pytest.raises(ValueError):
        Geometry(grid, offs, angs, step=2.0 * grid.h)
    with pytest.raises(ValueError):
        Geometry(grid, offs, angs, step=0.0)
    with pytest.raises(ValueError):
        Geometry(grid, offs[:1], angs, step=grid.h / 2)
    with pytest.raises(ValueError):
        Geometry(grid, offs, angs[:0], step=grid.h / 2)


def test_zero_maps_to_zero():
    grid = make_grid(8, 1.0)
    geom = make_geometry(grid, n_phi=12)
    zero2 = VectorField(grid, np.zeros((8, 8, 2)))
    assert np.all(radon_forward(zero2, geom).data == 0.0)
    assert np.all(ray_forward(zero2, geom).data == 0.0)
    zsino = make_sinogram(1.0, geom.n_r, geom.n_phi, np.zeros((geom.n_r, geom.n_phi, 1)))
    assert np.all(radon_adjoint(zsino, geom).data == 0.0)
    assert np.all(ray_adjoint(zsino, geom).data == 0.0)


def test_linearity():
    rng = np.random.Generator(np.random.PCG64(SEED))
    grid = make_grid(8, 1.0)
    geom = make_geometry(grid, n_phi=10)
    a = VectorField(grid, rng.standard_normal((8, 8, 2)))
    b = VectorField(grid, rng.standard_normal((8, 8, 2)))
    lhs = radon_forward(VectorField(grid, 2.5 * a.data - 0.5 * b.data), geom).data
    rhs = 2.5 * radon_forward(a, geom).data - 0.5 * radon_forward(b, geom).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    lhs = ray_forward(VectorField(grid, 2.5 * a.data - 0.5 * b.data), geom).data
    rhs = 2.5 * ray_forward(a, geom).data - 0.5 * ray_forward(b, geom).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_constant_square_center_chord():
    # the full square of ones integrates to the vertical chord length 2*extent
    # on the center ray at angle 0
    grid = make_grid(32, 1.0)
    geom = make_geometry(grid, n_r=45)
    ones = VectorField(grid, np.ones((32, 32, 1)))
    sino = radon_forward(ones, geom)
    center = np.argmin(np.abs(geom.offsets))
    assert abs(geom.offsets[center]) < 1e-12
    assert abs(sino.data[center, 0, 0] - 2.0) <= 2.0 * geom.step


def test_disk_center_chords():
    # indicator of the disk of radius 0.5: every center ray sees chord 1
    radius = 0.5
    grid = make_grid(64, 1.0)
    geom = make_geometry(grid, n_r=45, n_phi=24)
    xy = pixel_centers(grid)
    inside = (np.linalg.norm(xy, axis=-1) <= radius).astype(np.float64)
    sino = radon_forward(VectorField(grid, inside[..., None]), geom)
    center = np.argmin(np.abs(geom.offsets))
    for j in range(geom.n_phi):
        assert abs(sino.data[center, j, 0] - 2.0 * radius) <= 2.0 * geom.step


def test_forward_matches_quadrature_oracle():
    grid = make_grid(64, 1.0)
    geom = make_geometry(grid, n_r=45, n_phi=24)
    field = _gaussian_bump_field(grid)
    sino = radon_forward(field, geom)
    sigma = 0.25

    def bump(x, y):
        return math.exp(-(x * x + y * y) / (2.0 * sigma * sigma))

    for ir in (10, 22, 30):
        for jp in (0, 7, 15):
            oracle = line_integral_quadrature(
                bump, geom.offsets[ir], geom.angles[jp], geom.step
            )[0]
            assert abs(sino.data[ir, jp, 0] - oracle) <= 5e-3


@pytest.mark.parametrize("m", [1, 2, 3])
def test_radon_adjoint_identity(m):
    rng = np.random.Generator(np.random.PCG64(SEED + m))
    grid = make_grid(8, 1.0)
    geom = make_geometry(grid, n_phi=15)
    for _ in range(20):
        w = VectorField(grid, rng.standard_normal((8, 8, m)))
        v = make_sinogram(1.0, geom.n_r, geom.n_phi, rng.standard_normal((geom.n_r, geom.n_phi, m)))
        lhs = float(np.sum(radon_forward(w, geom).data * v.data))
        rhs = float(np.sum(w.data * radon_adjoint(v, geom).data))
        scale = np.linalg.norm(w.data) * np.linalg.norm(v.data)
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_ray_adjoint_identity():
    rng = np.random.Generator(np.random.PCG64(SEED + 10))
    grid = make_grid(8, 1.0)
    geom = make_geometry(grid, n_phi=15)
    for _ in range(20):
        w = VectorField(grid, rng.standard_normal((8, 8, 2)))
        v = make_sinogram(1.0, geom.n_r, geom.n_phi, rng.standard_normal((geom.n_r, geom.n_phi, 1)))
        lhs = float(np.sum(ray_forward(w, geom).data * v.data))
        rhs = float(np.sum(w.data * ray_adjoint(v, geom).data))
        scale = np.linalg.norm(w.data) * np.linalg.norm(v.data)
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_back_projection_support_locality():
    # a single sinogram entry back-projects onto a band around its line
    grid = make_grid(16, 1.0)
    geom = make_geometry(grid, n_phi=24)
    data = np.zeros((geom.n_r, geom.n_phi, 1))
    ir, jp = 7, 5
    data[ir, jp, 0] = 1.0
    sino = make_sinogram(1.0, geom.n_r, geom.n_phi, data)
    bp = radon_adjoint(sino, geom).data[..., 0]
    assert np.any(bp != 0.0)
    xy = pixel_centers(grid)
    phi = geom.angles[jp]
    dist = np.abs(
        xy[..., 0] * np.cos(phi) + xy[..., 1] * np.sin(phi) - geom.offsets[ir]
    )
    assert np.max(dist[bp != 0.0]) < 2.0 * grid.h


def test_ray_is_projected_radon():
    rng = np.random.Generator(np.random.PCG64(SEED + 20))
    grid = make_grid(12, 1.0)
    geom = make_geometry(grid, n_phi=18)
    w = VectorField(grid, rng.standard_normal((12, 12, 2)))
    full = radon_forward(w, geom).data
    st = np.sin(geom.angles)[None, :]
    ct = np.cos(geom.angles)[None, :]
    expected = -st * full[:, :, 0] + ct * full[:, :, 1]
    got = ray_forward(w, geom).data[:, :, 0]
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_constant_field_ray_sinogram():
    # a constant vector field is visible to the ray transform: at the center
    # ray of angle 0 the value is c . (0, 1) times the chord length 2*extent
    grid = make_grid(32, 1.0)
    geom = make_geometry(grid, n_r=45, n_phi=12)
    c = np.array([0.3, 0.8])
    w = VectorField(grid, np.broadcast_to(c, (32, 32, 2)).copy())
    sino = ray_forward(w, geom)
    assert np.max(np.abs(sino.data)) > 0.1
    center = np.argmin(np.abs(geom.offsets))
    assert abs(sino.data[center, 0, 0] - c[1] * 2.0) <= 2.0 * geom.step


def test_potential_field_annihilation():
    # the ray transform of a gradient field with vanishing boundary potential
    # is zero in the continuum; the discrete version is small relative to the
    # Radon transform of the same field
    grid = make_grid(64, 1.0)
    geom = make_geometry(grid)
    w = _potential_gradient_field(grid)
    ray_norm = np.linalg.norm(ray_forward(w, geom).data)
    radon_norm = np.linalg.norm(radon_forward(w, geom).data)
    assert ray_norm / radon_norm < 5e-2

    sigma = 0.25
    for r, phi in ((0.3, 0.5), (0.0, 1.2), (-0.5, 2.5)):

        def integrand(x, y):
            psi = math.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
            wx = -x / sigma**2 * psi
            wy = -y / sigma**2 * psi
            return -math.sin(phi) * wx + math.cos(phi) * wy

        assert abs(line_integral_quadrature(integrand, r, phi, 0.005)[0]) < 1e-6


@pytest.mark.parametrize("p", [1.1, 2.0])
def test_continuity_bound(p):
    rng = np.random.Generator(np.random.PCG64(SEED + 30))
    grid = make_grid(16, 1.0)
    geom = make_geometry(grid, n_phi=30)
    bound = radon_continuity_constant(grid.extent * math.sqrt(2.0), p)
    for _ in range(50):
        w = VectorField(grid, rng.standard_normal((16, 16, 2)))
        assert _sino_norm_p(radon_forward(w, geom), p) <= bound * _field_norm_p(w, p)
        assert _sino_norm_p(ray_forward(w, geom), p) <= bound * _field_norm_p(w, p)


def test_continuity_constant_values():
    np.testing.assert_allclose(radon_continuity_constant(1.0, 2.0), 4.0 * np.pi)
    np.testing.assert_allclose(radon_continuity_constant(0.5, 1.0), 2.0 * np.pi)
    with pytest.raises(ValueError):
        radon_continuity_constant(1.0, 0.5)


def test_rotation_covariance():
    # rotating a disk-supported image by 90 degrees permutes the sinogram:
    # angles shift by half the angle count, the wrapped half flips in offset
    grid = make_grid(16, 1.0)
    geom = make_geometry(grid, n_r=23, n_phi=12)
    xy = pixel_centers(grid)
    r = np.linalg.norm(xy, axis=-1)
    mask = np.maximum(0.0, 1.0 - (r / 0.9) ** 2) ** 2
    f = np.cos(3.0 * xy[..., 0]) * np.sin(2.0 * xy[..., 1]) * mask
    sino = radon_forward(VectorField(grid, f[..., None]), geom).data[..., 0]
    rotated = np.rot90(f, 1)
    sino_rot = radon_forward(VectorField(grid, rotated[..., None]), geom).data[..., 0]
    half = geom.n_phi // 2
    expected = np.empty_like(sino_rot)
    expected[:, half:] = sino[:, :half]
    expected[:, :half] = sino[::-1, half:]
    np.testing.assert_allclose(sino_rot, expected, atol=1e-10)


def test_step_halving_stability():
    grid = make_grid(32, 1.0)
    field = _gaussian_bump_field(grid)
    coarse = radon_forward(field, make_geometry(grid, n_phi=24)).data
    fine = radon_forward(field, make_geometry(grid, n_phi=24, step=grid.h / 4.0)).data
    rel = np.linalg.norm(fine - coarse) / np.linalg.norm(fine)
    assert rel < 1e-3


def test_shape_and_grid_mismatch_errors():
    grid = make_grid(8, 1.0)
    other = make_grid(10, 1.0)
    geom = make_geometry(grid, n_phi=6)
    with pytest.raises(ValueError):
        radon_forward(VectorField(other, np.zeros((10, 10, 1))), geom)
    with pytest.raises(ValueError):
        ray_forward(VectorField(grid, np.zeros((8, 8, 3))), geom)
    bad = make_sinogram(1.0, geom.n_r, geom.n_phi + 1, np.zeros((geom.n_r, geom.n_phi + 1, 1)))
    with pytest.raises(ValueError):
        radon_adjoint(bad, geom)
    wrong_extent = make_sinogram(2.0, geom.n_r, geom.n_phi, np.zeros((geom.n_r, geom.n_phi, 1)))
    with pytest.raises(ValueError):
        radon_adjoint(wrong_extent, geom)
    two_channel = make_sinogram(1.0, geom.n_r, geom.n_phi, np.zeros((geom.n_r, geom.n_phi, 2)))
    with pytest.raises(ValueError):
        ray_adjoint(two_channel, geom)
