"""Regularization energies, data fidelity, and full objective assembly.

The central regularizer is a double sum over ordered pixel pairs,

    h^4 * sum_x sum_z d(w(x), w(x+z))^p * rho(z*h) / |z*h|^(2 + p*s),

with d a metric on the value manifold, rho the mollifier stencil (or 1 for
the un-mollified variant, which sums over all pairs and is restricted to
small grids), and pairs leaving the grid dropped.  The z = 0 term is always
excluded.  Gradients use the ordered-pair symmetry: the contribution at x is
twice the one-sided derivative summed over the stencil.

Non-smooth spots follow one subgradient convention throughout: a factor that
would be singular or undefined (|delta|^(p-2) at delta = 0 for p < 2, the
angle wrap discontinuity, antipodal points of the circle) evaluates to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import AngleField, Grid, Sinogram, VectorField
from .metrics import MetricSpec, Mollifier, wrap_angle
from .optimize import project_annulus
from .transforms import Geometry, radon_forward, radon_adjoint, ray_forward, ray_adjoint

_TINY = 1e-12

OPERATORS = ("radon", "ray")

PARAMETERIZATIONS = ("cartesian", "polar")


@dataclass(frozen=True)
class RegConfig:
    """Regularizer settings: differentiability order s, exponent p, weight
    alpha, the value metric, and the mollifier stencil.

    mollifier None selects the un-mollified full double sum, which is only
    meant for small test grids.
    """

    s: float = 0.49
    p: float = 2.0
    alpha: float = 1.0
    metric: MetricSpec = MetricSpec()
    mollifier: Mollifier | None = None

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not self.p > 1.0:
            raise ValueError(f"p must be > 1, got {self.p}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")


@dataclass
class Objective:
    """Evaluation contract handed to the optimizer.

    evaluate(params, need_grad) returns (value, gradient or None) with the
    gradient shaped like params.
    """

    evaluate: Callable[[np.ndarray, bool], tuple[float, np.ndarray | None]]
    shape: tuple[int, ...]

    def __call__(self, params: np.ndarray) -> tuple[float, np.ndarray]:
        return self.evaluate(params, True)

    def value(self, params: np.ndarray) -> float:
        return self.evaluate(params, False)[0]


# ---- pair kernels ----
# Each kernel maps two (..., C) slabs to (d^p, d(d^p)/d(first argument)).


def _kernel_euclidean(a, b, p, metric, want_grad):
    delta = a - b
    nrm = np.linalg.norm(delta, axis=-1)
    val = nrm**p
    if not want_grad:
        return val, None
    small = nrm < _TINY
    safe = np.where(small, 1.0, nrm)
    fac = np.where(small, 0.0, p * safe ** (p - 2.0))
    return val, fac[..., None] * delta


def _kernel_angle(a, b, p, metric, want_grad):
    d = wrap_angle(a[..., 0] - b[..., 0])
    ad = np.abs(d)
    val = ad**p
    if not want_grad:
        return val, None
    live = (ad > _TINY) & (ad < np.pi - _TINY)
    fac = np.where(live, p * ad ** (p - 1.0), 0.0)
    return val, (fac * np.sign(d))[..., None]


def _kernel_sphere(a, b, p, metric, want_grad):
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    if np.any(na < _TINY) or np.any(nb < _TINY):
        raise ValueError("circle metric is undefined for zero vectors")
    u = a / na[..., None]
    v = b / nb[..., None]
    c = np.clip(np.sum(u * v, axis=-1), -1.0, 1.0)
    d = np.arccos(c)
    val = d**p
    if not want_grad:
        return val, None
    sin_d = np.sqrt(1.0 - c * c)
    live = sin_d > 1e-9
    safe = np.where(live, sin_d, 1.0)
    fac = np.where(live, -p * d ** (p - 1.0) / (safe * na), 0.0)
    return val, fac[..., None] * (v - c[..., None] * u)


def _kernel_product_cart(a, b, p, metric, want_grad):
    ax, ay = a[..., 0], a[..., 1]
    bx, by = b[..., 0], b[..., 1]
    r1 = np.hypot(ax, ay)
    r2 = np.hypot(bx, by)
    # atan2 of the cross and dot products is the wrapped angle difference
    delta = np.arctan2(ay * bx - ax * by, ax * bx + ay * by)
    arc = np.abs(delta)
    dl = r1 - r2
    adl = np.abs(dl)
    val = arc**p + metric.gamma * adl**p
    if not want_grad:
        return val, None
    live_a = (arc > _TINY) & (arc < np.pi - _TINY)
    ga = np.where(live_a, p * arc ** (p - 1.0), 0.0) * np.sign(delta) / (r1 * r1)
    live_l = adl > _TINY
    safe = np.where(live_l, adl, 1.0)
    gl = metric.gamma * p * np.where(live_l, safe ** (p - 2.0), 0.0) * dl / r1
    return val, np.stack([-ga * ay + gl * ax, ga * ax + gl * ay], axis=-1)


def _kernel_product_polar(a, b, p, metric, want_grad):
    """Product metric expressed in (1-normalized angle, length) channels."""
    two_pi = 2.0 * np.pi
    delta = wrap_angle(two_pi * (a[..., 0] - b[..., 0]))
    arc = np.abs(delta)
    dl = a[..., 1] - b[..., 1]
    adl = np.abs(dl)
    val = arc**p + metric.gamma * adl**p
    if not want_grad:
        return val, None
    live_a = (arc > _TINY) & (arc < np.pi - _TINY)
    ga = np.where(live_a, p * arc ** (p - 1.0), 0.0) * np.sign(delta) * two_pi
    live_l = adl > _TINY
    safe = np.where(live_l, adl, 1.0)
    gl = metric.gamma * p * np.where(live_l, safe ** (p - 2.0), 0.0) * dl
    return val, np.stack([ga, gl], axis=-1)


_KERNELS = {
    "euclidean": _kernel_euclidean,
    "sphere": _kernel_sphere,
    "angle": _kernel_angle,
    "product": _kernel_product_cart,
}


def _offset_weights(grid: Grid, mollifier: Mollifier | None):
    if mollifier is None:
        if grid.H > 16:
            raise ValueError(
                "the un-mollified full double sum is restricted to grids of at most 16x16"
            )
        n = grid.H - 1
    else:
        if abs(mollifier.h - grid.h) > 1e-12 * grid.h:
            raise ValueError(
                f"mollifier was built for pixel size {mollifier.h}, grid has {grid.h}"
            )
        n = mollifier.n_rho
    out = []
    for zi in range(-n, n + 1):
        for zj in range(-n, n + 1):
            if zi == 0 and zj == 0:
                continue
            rho = 1.0 if mollifier is None else float(mollifier.weights[mollifier.n_rho + zi, mollifier.n_rho + zj])
            if rho > 0.0:
                out.append((zi, zj, rho))
    return out


def _pair_sum(data, grid, s, p, metric, mollifier, kernel, want_grad):
    H, W, h = grid.H, grid.W, grid.h
    val = 0.0
    grad = np.zeros_like(data) if want_grad else None
    for zi, zj, rho in _offset_weights(grid, mollifier):
        i_lo, i_hi = max(0, -zi), min(H, H - zi)
        j_lo, j_hi = max(0, -zj), min(W, W - zj)
        if i_lo >= i_hi or j_lo >= j_hi:
            continue
        a = data[i_lo:i_hi, j_lo:j_hi]
        b = data[i_lo + zi : i_hi + zi, j_lo + zj : j_hi + zj]
        kval = rho / (h * np.hypot(zi, zj)) ** (2.0 + p * s)
        d_p, d1 = kernel(a, b, p, metric, want_grad)
        val += kval * float(d_p.sum())
        if want_grad:
            grad[i_lo:i_hi, j_lo:j_hi] += (2.0 * kval) * d1
    h4 = h**4
    return h4 * val, (h4 * grad if want_grad else None)


def _annulus_check(data, metric: MetricSpec) -> None:
    r = np.linalg.norm(data, axis=-1)
    slack = 1e-8 * max(1.0, metric.r_max)
    if np.any(r < metric.eps - slack) or np.any(r > metric.r_max + slack):
        raise ValueError(
            f"field values must lie in the annulus [{metric.eps}, {metric.r_max}]"
        )


def _energy_data(field: VectorField | AngleField, cfg: RegConfig) -> np.ndarray:
    kind = cfg.metric.kind
    if kind == "angle":
        if not isinstance(field, AngleField):
            raise ValueError("the angle metric applies to AngleField inputs")
        return field.radians()[..., None]
    if not isinstance(field, VectorField):
        raise ValueError(f"the {kind} metric applies to VectorField inputs")
    if kind in ("sphere", "product") and field.m != 2:
        raise ValueError(f"the {kind} metric needs 2-channel fields, got m={field.m}")
    if kind == "product":
        _annulus_check(field.data, cfg.metric)
    return field.data


def nonlocal_energy(field: VectorField | AngleField, cfg: RegConfig) -> float:
    """Value of the pairwise double-sum regularizer."""
    data = _energy_data(field, cfg)
    val, _ = _pair_sum(
        data, field.grid, cfg.s, cfg.p, cfg.metric, cfg.mollifier, _KERNELS[cfg.metric.kind], False
    )
    return val


def nonlocal_energy_grad(field: VectorField | AngleField, cfg: RegConfig) -> np.ndarray:
    """Gradient of nonlocal_energy with respect to the field samples.

    For AngleField input the gradient is taken with respect to the angles in
    radians and has shape (H, W); otherwise it matches field.data.
    """
    data = _energy_data(field, cfg)
    _, grad = _pair_sum(
        data, field.grid, cfg.s, cfg.p, cfg.metric, cfg.mollifier, _KERNELS[cfg.metric.kind], True
    )
    if cfg.metric.kind == "angle":
        return grad[..., 0]
    return grad


def sobolev_energy(field: VectorField, p: float = 2.0) -> tuple[float, np.ndarray]:
    """First-order Sobolev energy h^2 * sum |grad w|_F^p and its gradient.

    Forward differences scaled by 1/h; the last row and column take the
    one-sided difference of their inner neighbor, i.e. the derivative is
    extended by zero there.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return _sobolev_raw(field.data, field.grid.h, p, True)


def _sobolev_raw(data, h, p, want_grad):
    gx = np.zeros_like(data)
    gy = np.zeros_like(data)
    gx[:, :-1, :] = (data[:, 1:, :] - data[:, :-1, :]) / h
    gy[:-1, :, :] = (data[1:, :, :] - data[:-1, :, :]) / h
    fro = np.sqrt(np.sum(gx * gx + gy * gy, axis=-1))
    value = h * h * float(np.sum(fro**p))
    if not want_grad:
        return value, None
    small = fro < _TINY
    safe = np.where(small, 1.0, fro)
    fac = np.where(small, 0.0, p * safe ** (p - 2.0))[..., None]
    ax = fac * gx
    ay = fac * gy
    grad = np.zeros_like(data)
    grad[:, :-1, :] -= ax[:, :-1, :] / h
    grad[:, 1:, :] += ax[:, :-1, :] / h
    grad[:-1, :, :] -= ay[:-1, :, :] / h
    grad[1:, :, :] += ay[:-1, :, :] / h
    return value, grad * (h * h)


def _operator_pair(operator: str):
    if operator == "radon":
        return radon_forward, radon_adjoint
    if operator == "ray":
        return ray_forward, ray_adjoint
    raise ValueError(f"unknown operator {operator!r}, expected one of {OPERATORS}")


def data_fidelity(
    field: VectorField,
    v_obs: Sinogram,
    geom: Geometry,
    operator: str = "radon",
    p: float = 2.0,
    need_grad: bool = True,
) -> tuple[float, np.ndarray | None]:
    """Quadrature-weighted p-power misfit between the projected field and data.

    value = dr * dphi * sum |A w - v|^p with |.| the Euclidean norm over the
    sinogram channels; the gradient back-projects p * |res|^(p-2) * res
    through the adjoint of the operator.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    fwd, adj = _operator_pair(operator)
    sino = fwd(field, geom)
    if sino.data.shape != v_obs.data.shape:
        raise ValueError(
            f"observed sinogram shape {v_obs.data.shape} does not match the "
            f"operator output {sino.data.shape}"
        )
    res = sino.data - v_obs.data
    rn = np.linalg.norm(res, axis=-1)
    wq = geom.dr * geom.dphi
    value = wq * float(np.sum(rn**p))
    if not need_grad:
        return value, None
    small = rn < _TINY
    safe = np.where(small, 1.0, rn)
    fac = np.where(small, 0.0, p * safe ** (p - 2.0))
    weighted = Sinogram(
        geom.offsets, geom.angles, (wq * fac)[..., None] * res, geom.grid.extent
    )
    return value, adj(weighted, geom).data


def lifted_objective(
    u: AngleField | np.ndarray,
    v_obs: Sinogram,
    geom: Geometry,
    cfg: RegConfig,
    fid_p: float = 2.0,
    need_grad: bool = True,
) -> tuple[float, np.ndarray | None]:
    """Objective for circle-valued reconstruction through lifted angles.

    The angles u (radians) are mapped to the unit vectors (cos u, sin u),
    compared against a 2-channel Radon sinogram, and regularized with the
    pair energy of the angle arc distance.  Value and gradient are periodic
    in u with period 2*pi; the gradient is with respect to the radians.
    """
    u_arr = u.radians() if isinstance(u, AngleField) else np.asarray(u, dtype=np.float64)
    grid = geom.grid
    if u_arr.shape != (grid.H, grid.W):
        raise ValueError(f"angles must have shape {(grid.H, grid.W)}, got {u_arr.shape}")
    if v_obs.m != 2:
        raise ValueError(f"lifted objective needs a 2-channel sinogram, got M={v_obs.m}")
    cu = np.cos(u_arr)
    su = np.sin(u_arr)
    field = VectorField(grid, np.stack([cu, su], axis=-1))
    fid_val, fid_grad = data_fidelity(field, v_obs, geom, "radon", fid_p, need_grad)
    phi_val, phi_grad = _pair_sum(
        u_arr[..., None], grid, cfg.s, cfg.p, cfg.metric, cfg.mollifier, _kernel_angle, need_grad
    )
    value = fid_val + cfg.alpha * phi_val
    if not need_grad:
        return value, None
    grad = -su * fid_grad[..., 0] + cu * fid_grad[..., 1] + cfg.alpha * phi_grad[..., 0]
    return value, grad


def make_lifted_objective(
    v_obs: Sinogram, geom: Geometry, cfg: RegConfig, fid_p: float = 2.0
) -> Objective:
    """Wrap lifted_objective for the optimizer; parameters are radians."""

    def evaluate(params, need_grad):
        return lifted_objective(params, v_obs, geom, cfg, fid_p, need_grad)

    return Objective(evaluate, (geom.grid.H, geom.grid.W))


def reconstruction_objective(
    v_obs: Sinogram,
    geom: Geometry,
    cfg: RegConfig,
    operator: str = "ray",
    parameterization: str = "cartesian",
    fid_p: float | None = None,
) -> Objective:
    """Fidelity plus alpha times the pair energy, ready for the optimizer.

    cartesian parameters are the field samples themselves, shape (H, W, m).
    polar parameters, available for the product metric only, are per-pixel
    (1-normalized angle, length), shape (H, W, 2); lengths are clamped to
    the annulus before evaluation and the clamp subgradient (0 strictly
    outside) enters the returned gradient.  With the product metric the
    cartesian variant likewise projects values onto the annulus first.
    """
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}, expected one of {OPERATORS}")
    if parameterization not in PARAMETERIZATIONS:
        raise ValueError(
            f"unknown parameterization {parameterization!r}, expected one of {PARAMETERIZATIONS}"
        )
    grid = geom.grid
    p_fid = cfg.p if fid_p is None else float(fid_p)
    if operator == "ray":
        m = 2
        if v_obs.m != 1:
            raise ValueError(f"ray data must have M=1, got {v_obs.m}")
    else:
        m = v_obs.m
    if parameterization == "polar":
        if cfg.metric.kind != "product":
            raise ValueError("polar parameterization requires the product metric")
        return _polar_objective(v_obs, geom, cfg, operator, p_fid)
    if cfg.metric.kind == "angle":
        raise ValueError("use the lifted objective for angle parameters")
    if cfg.metric.kind in ("sphere", "product") and m != 2:
        raise ValueError(f"the {cfg.metric.kind} metric needs m=2, got m={m}")
    kernel = _KERNELS[cfg.metric.kind]

    def evaluate(params, need_grad):
        data = np.asarray(params, dtype=np.float64)
        if data.shape != (grid.H, grid.W, m):
            raise ValueError(f"parameters must have shape {(grid.H, grid.W, m)}")
        if cfg.metric.kind == "product":
            inside = _annulus_inside(data, cfg.metric)
            data = project_annulus(data, cfg.metric.eps, cfg.metric.r_max)
        fid_val, fid_grad = data_fidelity(
            VectorField(grid, data), v_obs, geom, operator, p_fid, need_grad
        )
        phi_val, phi_grad = _pair_sum(
            data, grid, cfg.s, cfg.p, cfg.metric, cfg.mollifier, kernel, need_grad
        )
        value = fid_val + cfg.alpha * phi_val
        if not need_grad:
            return value, None
        grad = fid_grad + cfg.alpha * phi_grad
        if cfg.metric.kind == "product":
            grad = grad * inside[..., None]
        return value, grad

    return Objective(evaluate, (grid.H, grid.W, m))


def _annulus_inside(data, metric: MetricSpec) -> np.ndarray:
    r = np.linalg.norm(data, axis=-1)
    return ((r >= metric.eps - _TINY) & (r <= metric.r_max + _TINY)).astype(np.float64)


def _polar_objective(v_obs, geom, cfg, operator, p_fid) -> Objective:
    grid = geom.grid
    lo, hi = cfg.metric.eps, cfg.metric.r_max
    two_pi = 2.0 * np.pi

    def evaluate(params, need_grad):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (grid.H, grid.W, 2):
            raise ValueError(f"polar parameters must have shape {(grid.H, grid.W, 2)}")
        theta = params[..., 0]
        ell = params[..., 1]
        ell_c = np.clip(ell, lo, hi)
        inside = ((ell >= lo - _TINY) & (ell <= hi + _TINY)).astype(np.float64)
        ang = two_pi * theta
        ca = np.cos(ang)
        sa = np.sin(ang)
        w = np.stack([ell_c * ca, ell_c * sa], axis=-1)
        fid_val, fid_grad = data_fidelity(
            VectorField(grid, w), v_obs, geom, operator, p_fid, need_grad
        )
        polar_data = np.stack([theta, ell_c], axis=-1)
        phi_val, phi_grad = _pair_sum(
            polar_data, grid, cfg.s, cfg.p, cfg.metric, cfg.mollifier, _kernel_product_polar, need_grad
        )
        value = fid_val + cfg.alpha * phi_val
        if not need_grad:
            return value, None
        g0 = fid_grad[..., 0]
        g1 = fid_grad[..., 1]
        g_theta = two_pi * ell_c * (-sa * g0 + ca * g1) + cfg.alpha * phi_grad[..., 0]
        g_ell = (ca * g0 + sa * g1 + cfg.alpha * phi_grad[..., 1]) * inside
        return value, np.stack([g_theta, g_ell], axis=-1)

    return Objective(evaluate, (grid.H, grid.W, 2))


def sobolev_objective(
    v_obs: Sinogram,
    geom: Geometry,
    beta: float,
    p: float = 2.0,
    operator: str = "ray",
    fid_p: float | None = None,
) -> Objective:
    """Fidelity plus beta times the first-order Sobolev energy, on raw fields."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}, expected one of {OPERATORS}")
    grid = geom.grid
    p_fid = p if fid_p is None else float(fid_p)
    m = 2 if operator == "ray" else v_obs.m

    def evaluate(params, need_grad):
        data = np.asarray(params, dtype=np.float64)
        if data.shape != (grid.H, grid.W, m):
            raise ValueError(f"parameters must have shape {(grid.H, grid.W, m)}")
        fid_val, fid_grad = data_fidelity(
            VectorField(grid, data), v_obs, geom, operator, p_fid, need_grad
        )
        reg_val, reg_grad = _sobolev_raw(data, grid.h, p, need_grad)
        value = fid_val + beta * reg_val
        if not need_grad:
            return value, None
        return value, fid_grad + beta * reg_grad

    return Objective(evaluate, (grid.H, grid.W, m))
