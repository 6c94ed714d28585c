"""Gradient descent with Armijo backtracking, plus the range projections.

The solver knows nothing about tomography: it takes an objective that maps a
parameter array to (value, gradient) and walks downhill.  Constrained value
ranges (the annulus, periodic angles) are handled by projection, either once
on the final iterate or after every step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max-iters"
STATUS_LINE_SEARCH = "line-search-failed"


@dataclass(frozen=True)
class GDParams:
    """Line-search gradient descent settings."""

    step0: float = 1.0
    shrink: float = 0.5
    armijo_c: float = 1e-4
    grad_tol: float = 1e-6
    max_iters: int = 500
    max_backtracks: int = 40

    def __post_init__(self):
        if self.step0 <= 0:
            raise ValueError(f"step0 must be positive, got {self.step0}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError(f"armijo_c must lie in (0, 1), got {self.armijo_c}")
        if self.grad_tol < 0:
            raise ValueError(f"grad_tol must be nonnegative, got {self.grad_tol}")
        if self.max_iters < 0 or self.max_backtracks < 0:
            raise ValueError("max_iters and max_backtracks must be nonnegative")


@dataclass
class GDResult:
    """Final iterate plus the per-iteration trace.

    trace rows are (iteration, objective, sup-norm of gradient, accepted
    step); row 0 describes the initial point with step 0.
    """

    x: np.ndarray
    value: float
    status: str
    iterations: int
    trace: np.ndarray

    def trace_csv(self) -> str:
        lines = ["iter,objective,grad_norm,step"]
        for row in self.trace:
            lines.append(
                f"{int(row[0])},{row[1]:.17g},{row[2]:.17g},{row[3]:.17g}"
            )
        return "\n".join(lines) + "\n"


def _value_of(objective, x: np.ndarray) -> float:
    value_fn = getattr(objective, "value", None)
    if value_fn is not None:
        return float(value_fn(x))
    return float(objective(x)[0])


def minimize(
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    params: GDParams = GDParams(),
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    project_each: bool = False,
) -> GDResult:
    """Descend the objective from x0 with Armijo backtracking.

    Each iteration tries steps step0 * shrink^j along the negative gradient
    and accepts the first candidate x+ with f(x+) <= f(x) - armijo_c / t *
    |x+ - x|^2, which for an unprojected step is the classical f(x) -
    armijo_c * t * |grad|^2.  Iteration stops when the gradient sup-norm
    drops to grad_tol, the iteration budget runs out, or no step is
    accepted.  A supplied projection is applied to the final iterate, and
    after every step when project_each is set.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    if project is not None and project_each:
        x = project(x)
    fx, g = objective(x)
    fx = float(fx)
    if not np.isfinite(fx):
        raise ValueError("objective is not finite at the initial point")
    gsup = float(np.max(np.abs(g)))
    rows = [(0, fx, gsup, 0.0)]
    status = STATUS_MAX_ITERS
    iterations = 0
    for k in range(1, params.max_iters + 1):
        if gsup <= params.grad_tol:
            status = STATUS_CONVERGED
            break
        t = params.step0
        accepted = False
        for _ in range(params.max_backtracks + 1):
            cand = x - t * g
            if project is not None and project_each:
                cand = project(cand)
            fc = _value_of(objective, cand)
            decrease = params.armijo_c / t * float(np.sum((cand - x) ** 2))
            if np.isfinite(fc) and decrease > 0.0 and fc <= fx - decrease:
                accepted = True
                break
            t *= params.shrink
        if not accepted:
            status = STATUS_LINE_SEARCH
            break
        x = cand
        fx = fc
        _, g = objective(x)
        gsup = float(np.max(np.abs(g)))
        iterations = k
        rows.append((k, fx, gsup, t))
    else:
        if gsup <= params.grad_tol:
            status = STATUS_CONVERGED
    if project is not None:
        x = project(x)
        fx = _value_of(objective, x)
    return GDResult(x=x, value=fx, status=status, iterations=iterations, trace=np.array(rows))


def project_annulus(x: np.ndarray, eps: float, r_max: float) -> np.ndarray:
    """Closest point in the annulus eps <= |x| <= r_max, last axis of size 2.

    Zero vectors, which have no unique closest point, map to (eps, 0).
    Points already inside come back bitwise unchanged.
    """
    if not (0.0 < eps < r_max):
        raise ValueError(f"need 0 < eps < r_max, got eps={eps}, r_max={r_max}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 2:
        raise ValueError("annulus projection is defined on R^2 values")
    r = np.linalg.norm(x, axis=-1)
    zero = r == 0.0
    safe = np.where(zero, 1.0, r)
    scale = np.clip(r, eps, r_max) / safe
    out = x * scale[..., None]
    if np.any(zero):
        out = out.copy()
        out[zero] = (eps, 0.0)
    return out


def project_angle(theta: np.ndarray | float) -> np.ndarray:
    """Reduce 1-normalized angles to the fundamental interval [0, 1)."""
    theta = np.asarray(theta, dtype=np.float64)
    return theta - np.floor(theta)
