"""Slow, independent oracles used by the test suite.

Everything here is a direct transcription of the defining formulas with
scalar Python loops and the math module.  These paths deliberately share no
array kernels with the production modules so the two can be compared.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .grid import AngleField, VectorField
from .metrics import MetricSpec, Mollifier


def _dist_scalar(a, b, metric: MetricSpec, p: float) -> float:
    """One pair distance, scalar math only."""
    if metric.kind == "euclidean":
        return math.sqrt(sum((ac - bc) ** 2 for ac, bc in zip(a, b)))
    if metric.kind == "sphere":
        na = math.sqrt(sum(c * c for c in a))
        nb = math.sqrt(sum(c * c for c in b))
        dot = sum(ac * bc for ac, bc in zip(a, b)) / (na * nb)
        return math.acos(max(-1.0, min(1.0, dot)))
    if metric.kind == "angle":
        return abs(math.remainder(a[0] - b[0], 2.0 * math.pi))
    if metric.kind == "product":
        t1 = math.atan2(a[1], a[0])
        t2 = math.atan2(b[1], b[0])
        arc = abs(math.remainder(t1 - t2, 2.0 * math.pi))
        dl = abs(math.hypot(a[0], a[1]) - math.hypot(b[0], b[1]))
        return (arc**p + metric.gamma * dl**p) ** (1.0 / p)
    raise ValueError(f"unknown metric kind {metric.kind!r}")


def phi_bruteforce(
    field: VectorField | AngleField,
    s: float,
    p: float,
    metric: MetricSpec,
    mollifier: Mollifier | None,
) -> float:
    """Quadruple loop over ordered pixel pairs of the pair-energy double sum.

    mollifier None means the un-mollified full double sum over all pairs.
    Restricted to grids of at most 16x16.
    """
    grid = field.grid
    if grid.H > 16:
        raise ValueError("brute-force double sum is restricted to grids of at most 16x16")
    if isinstance(field, AngleField):
        data = field.radians()[..., None]
    else:
        data = field.data
    h = grid.h
    n = mollifier.n_rho if mollifier is not None else max(grid.H, grid.W)
    total = 0.0
    for i in range(grid.H):
        for j in range(grid.W):
            for i2 in range(grid.H):
                for j2 in range(grid.W):
                    zi = i2 - i
                    zj = j2 - j
                    if zi == 0 and zj == 0:
                        continue
                    if max(abs(zi), abs(zj)) > n:
                        continue
                    rho = mollifier.weight(zi, zj) if mollifier is not None else 1.0
                    if rho == 0.0:
                        continue
                    d = _dist_scalar(data[i, j], data[i2, j2], metric, p)
                    dist = h * math.hypot(zi, zj)
                    total += d**p * rho / dist ** (2.0 + p * s)
    return h**4 * total


def line_integral_quadrature(
    func: Callable[[float, float], float | tuple | np.ndarray],
    r: float,
    phi: float,
    step: float,
    extent: float = 1.0,
) -> np.ndarray:
    """Composite midpoint rule for the line integral of an analytic field.

    The line is x(t) = r * theta + t * theta_perp with theta = (cos phi,
    sin phi), sampled over the full chord t in [-extent*sqrt(2),
    extent*sqrt(2)].  Returns one value per channel of func.
    """
    half = extent * math.sqrt(2.0)
    n = int(math.ceil(2.0 * half / step))
    ct, st = math.cos(phi), math.sin(phi)
    acc = None
    for k in range(n):
        t = -half + (k + 0.5) * step
        x = r * ct - t * st
        y = r * st + t * ct
        v = np.atleast_1d(np.asarray(func(x, y), dtype=np.float64))
        acc = v.copy() if acc is None else acc + v
    return acc * step


def fd_gradient(
    fun: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = 1e-5,
    coords: list[int] | np.ndarray | None = None,
) -> np.ndarray:
    """Central finite differences of a scalar function.

    coords selects flat indices to probe (all of them if None); untouched
    entries of the returned array are 0.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros(x.size)
    idx = range(x.size) if coords is None else coords
    for k in idx:
        e = np.zeros(x.size)
        e[k] = h
        fp = fun((x.ravel() + e).reshape(x.shape))
        fm = fun((x.ravel() - e).reshape(x.shape))
        g[k] = (fp - fm) / (2.0 * h)
    return g.reshape(x.shape)
