"""Value-manifold distances, the angle wrap, and the mollifier stencil."""

import numpy as np
import pytest

from manitomo import (
    MetricSpec,
    angle_distance,
    angle_length_distance,
    circle_distance,
    euclidean_distance,
    make_mollifier,
    wrap_angle,
)

SEED = 271828
N_RANDOM = 10_000


def _unit_vectors(rng, n):
    t = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def test_wrap_angle_examples():
    assert wrap_angle(0.0) == 0.0
    np.testing.assert_allclose(wrap_angle(3.5 * np.pi), -0.5 * np.pi, atol=1e-12)
    np.testing.assert_allclose(wrap_angle(-3.5 * np.pi), 0.5 * np.pi, atol=1e-12)
    # ties at odd multiples of pi land on +pi
    assert wrap_angle(np.pi) == np.pi
    assert wrap_angle(-np.pi) == np.pi
    rng = np.random.Generator(np.random.PCG64(SEED))
    x = rng.uniform(-50.0, 50.0, 1000)
    w = wrap_angle(x)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    np.testing.assert_allclose(np.cos(w), np.cos(x), atol=1e-9)
    np.testing.assert_allclose(np.sin(w), np.sin(x), atol=1e-9)


def test_euclidean_distance_examples():
    assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0
    assert euclidean_distance([1.3, -2.0], [1.3, -2.0]) == 0.0
    assert euclidean_distance([1.0, 0.0], [-1.0, 0.0]) == 2.0


def test_circle_distance_examples():
    np.testing.assert_allclose(circle_distance([1.0, 0.0], [0.0, 1.0]), np.pi / 2)
    np.testing.assert_allclose(circle_distance([1.0, 0.0], [-1.0, 0.0]), np.pi)
    assert circle_distance([0.6, 0.8], [0.6, 0.8]) == 0.0
    with pytest.raises(ValueError):
        circle_distance([0.0, 0.0], [1.0, 0.0])


def test_angle_distance_examples():
    np.testing.assert_allclose(angle_distance(0.0, 2.0 * np.pi), 0.0, atol=1e-12)
    np.testing.assert_allclose(angle_distance(0.0, np.pi / 2), np.pi / 2)
    np.testing.assert_allclose(angle_distance(0.1, 2.0 * np.pi - 0.1), 0.2, atol=1e-12)
    np.testing.assert_allclose(angle_distance(-7.3, -7.3 + 6.0 * np.pi), 0.0, atol=1e-9)


def test_angle_distance_matches_circle_distance():
    rng = np.random.Generator(np.random.PCG64(SEED))
    u1 = rng.uniform(-10.0, 10.0, N_RANDOM)
    u2 = rng.uniform(-10.0, 10.0, N_RANDOM)
    via_angles = angle_distance(u1, u2)
    via_vectors = circle_distance(
        np.stack([np.cos(u1), np.sin(u1)], axis=-1),
        np.stack([np.cos(u2), np.sin(u2)], axis=-1),
    )
    np.testing.assert_allclose(via_angles, via_vectors, atol=1e-12)


def test_product_distance_examples():
    x = np.array([0.3, 0.4])
    assert angle_length_distance(x, x, 2.0, 1.0, 1e-3, 1.0) == 0.0
    # same direction, lengths 1 and 0.5: pure length term
    a = np.array([1.0, 0.0])
    b = np.array([0.5, 0.0])
    np.testing.assert_allclose(angle_length_distance(a, b, 2.0, 1.0, 1e-3, 1.0), 0.5)
    # gamma 0 ignores lengths entirely
    c = np.array([0.0, 0.7])
    np.testing.assert_allclose(
        angle_length_distance(a, c, 2.0, 0.0, 1e-3, 1.0), np.pi / 2
    )
    with pytest.raises(ValueError):
        angle_length_distance(np.array([2.0, 0.0]), b, 2.0, 1.0, 1e-3, 1.0)
    with pytest.raises(ValueError):
        angle_length_distance(np.array([1e-6, 0.0]), b, 2.0, 1.0, 1e-3, 1.0)
    with pytest.raises(ValueError):
        angle_length_distance(a, b, 2.0, -1.0, 1e-3, 1.0)
    with pytest.raises(ValueError):
        angle_length_distance(a, b, 2.0, 1.0, 1.0, 0.5)


def test_sphere_metric_axioms():
    rng = np.random.Generator(np.random.PCG64(SEED))
    a = _unit_vectors(rng, N_RANDOM)
    b = _unit_vectors(rng, N_RANDOM)
    c = _unit_vectors(rng, N_RANDOM)
    dab = circle_distance(a, b)
    dba = circle_distance(b, a)
    assert np.array_equal(dab, dba)
    assert np.all(dab >= 0.0)
    assert np.all(circle_distance(a, a) == 0.0)
    dac = circle_distance(a, c)
    dcb = circle_distance(c, b)
    assert np.all(dab <= dac + dcb + 1e-12)


def test_sphere_sandwich_bound():
    rng = np.random.Generator(np.random.PCG64(SEED + 1))
    a = _unit_vectors(rng, N_RANDOM)
    b = _unit_vectors(rng, N_RANDOM)
    chord = np.linalg.norm(a - b, axis=-1)
    arc = circle_distance(a, b)
    assert np.all(chord <= arc + 1e-12)
    assert np.all(arc <= (np.pi / 2.0) * chord + 1e-9)


def test_product_metric_axioms():
    rng = np.random.Generator(np.random.PCG64(SEED + 2))
    eps, r_max, gamma, p = 0.1, 1.0, 0.8, 2.0

    def sample(n):
        r = rng.uniform(eps, r_max, n)
        return r[:, None] * _unit_vectors(rng, n)

    a, b, c = sample(N_RANDOM), sample(N_RANDOM), sample(N_RANDOM)
    dab = angle_length_distance(a, b, p, gamma, eps, r_max)
    dba = angle_length_distance(b, a, p, gamma, eps, r_max)
    np.testing.assert_allclose(dab, dba, atol=1e-15)
    assert np.all(angle_length_distance(a, a, p, gamma, eps, r_max) == 0.0)
    assert np.all(dab[np.linalg.norm(a - b, axis=-1) > 1e-9] > 0.0)
    dac = angle_length_distance(a, c, p, gamma, eps, r_max)
    dcb = angle_length_distance(c, b, p, gamma, eps, r_max)
    assert np.all(dab <= dac + dcb + 1e-12)


# Empirical upper ratios d / |x1 - x2| per (eps, gamma, p); the measured
# maxima were 13.7, 27.0, and 125.7.
PRODUCT_UPPER_PINS = [
    (0.1, 1.0, 2.0, 20.0),
    (0.05, 0.5, 1.5, 40.0),
    (0.01, 2.0, 1.1, 200.0),
]


@pytest.mark.parametrize("eps,gamma,p,upper", PRODUCT_UPPER_PINS)
def test_product_metric_euclidean_equivalence(eps, gamma, p, upper):
    rng = np.random.Generator(np.random.PCG64(SEED + 3))
    r_max = 1.0

    def sample(n):
        r = rng.uniform(eps, r_max, n)
        return r[:, None] * _unit_vectors(rng, n)

    x1, x2 = sample(N_RANDOM), sample(N_RANDOM)
    d = angle_length_distance(x1, x2, p, gamma, eps, r_max)
    e = np.linalg.norm(x1 - x2, axis=-1)
    # a length weight below one dilutes the length term, so the bound
    # constant picks up the matching power of 1/gamma
    c_l = 2.0 ** ((p - 1.0) / p) * max(1.0, r_max) / min(1.0, gamma) ** (1.0 / p)
    assert np.all(e <= c_l * d + 1e-12)
    keep = e > 1e-12
    assert np.all(d[keep] <= upper * e[keep])


def test_mollifier_shape_and_symmetry():
    mol = make_mollifier(1, 0.25)
    assert mol.weights.shape == (3, 3)
    assert mol.sigma == 0.5
    w = mol.weights
    # center largest, 4-neighbors equal, diagonals smaller
    assert w[1, 1] == mol.largest_weight
    assert w[0, 1] == w[1, 0] == w[1, 2] == w[2, 1]
    assert w[0, 0] == w[0, 2] == w[2, 0] == w[2, 2] == mol.smallest_weight
    assert w[0, 0] < w[0, 1] < w[1, 1]
    assert mol.weight(0, 0) == w[1, 1]
    assert mol.weight(1, -1) == w[2, 0]
    assert mol.weight(2, 0) == 0.0


@pytest.mark.parametrize("n_rho", [1, 2, 3])
def test_mollifier_unit_mass(n_rho):
    h = 2.0 / 32.0
    mol = make_mollifier(n_rho, h)
    np.testing.assert_allclose(mol.weights.sum() * h * h, 1.0, atol=1e-12)
    assert np.all(mol.weights > 0.0)


def test_mollifier_radius_two_support():
    mol = make_mollifier(2, 0.1)
    assert mol.weights.shape == (5, 5)
    off_center = mol.weights.copy()
    off_center[2, 2] = 0.0
    assert np.count_nonzero(off_center) == 24


def test_mollifier_radial_monotone():
    for n_rho in (1, 2, 3):
        mol = make_mollifier(n_rho, 0.0625)
        z = np.arange(-n_rho, n_rho + 1)
        zi, zj = np.meshgrid(z, z, indexing="ij")
        r = np.hypot(zi, zj).ravel()
        w = mol.weights.ravel()
        order = np.argsort(r)
        assert np.all(np.diff(w[order]) <= 1e-15)


def test_mollifier_custom_sigma():
    default = make_mollifier(2, 0.1)
    wide = make_mollifier(2, 0.1, sigma=3.0)
    assert wide.sigma == 3.0
    assert wide.largest_weight < default.largest_weight
    np.testing.assert_allclose(wide.weights.sum() * 0.01, 1.0, atol=1e-12)


def test_mollifier_validation():
    with pytest.raises(ValueError):
        make_mollifier(4, 0.1)
    with pytest.raises(ValueError):
        make_mollifier(0, 0.1)
    with pytest.raises(ValueError):
        make_mollifier(1, -0.1)
    with pytest.raises(ValueError):
        make_mollifier(1, 0.1, sigma=0.0)


def test_metric_spec_validation():
    MetricSpec("euclidean")
    MetricSpec("product", gamma=2.0, eps=0.01, r_max=1.5)
    with pytest.raises(ValueError):
        MetricSpec("chordal")
    with pytest.raises(ValueError):
        MetricSpec("product", eps=1.0, r_max=0.5)
    with pytest.raises(ValueError):
        MetricSpec("product", gamma=-0.5)
