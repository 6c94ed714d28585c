"""A scikit-learn style facade over the reconstruction pipeline.

One estimator covers the three methods: ``metric`` (vector fields on the
annulus with the product metric), ``lifted`` (circle-valued images through
lifted angles), and ``sobolev`` (the first-order Sobolev baseline on raw
vector fields).  fit consumes a Sinogram, optionally with the ground truth
as y for scoring and truth-perturbed starts, and leaves the reconstruction
in ``field_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .grid import AngleField, Grid, Sinogram, VectorField, make_grid
from .metrics import MetricSpec, make_mollifier
from .optimize import GDParams, GDResult, minimize, project_angle, project_annulus
from .phantoms import INIT_STREAM, rng_for, snr
from .regularizers import (
    RegConfig,
    make_lifted_objective,
    reconstruction_objective,
    sobolev_objective,
)
from .transforms import Geometry

METHODS = ("metric", "sobolev", "lifted")

INITS = ("zero", "constant", "truth-perturbed")

PROJECT_MODES = ("final", "per-iter")


def check_sinogram(X) -> Sinogram:
    """Validate the estimator input."""
    if not isinstance(X, Sinogram):
        raise ValueError(f"X must be a Sinogram, got {type(X).__name__}")
    return X


def check_truth(y, method: str, grid: Grid):
    """Validate an optional ground-truth field against method and grid.

    AngleField and 2-channel VectorField truths are interchangeable: the
    same circle-valued phantom can seed a lifted run or its vector-valued
    comparison run.
    """
    if y is None:
        return None
    if method == "lifted":
        if isinstance(y, VectorField) and y.m == 2:
            y = AngleField(y.grid, np.arctan2(y.data[..., 1], y.data[..., 0]), normalized=False)
        if not isinstance(y, AngleField):
            raise ValueError("lifted reconstruction expects an AngleField truth")
    else:
        if isinstance(y, AngleField):
            y = y.to_vector_field()
        if not isinstance(y, VectorField) or y.m != 2:
            raise ValueError(f"{method} reconstruction expects a 2-channel VectorField truth")
    if y.grid != grid:
        raise ValueError(f"truth grid {y.grid.shape} does not match size {grid.H}")
    return y


class Reconstructor(BaseEstimator):
    """Variational tomographic reconstruction as an sklearn estimator.

    Parameters mirror the CLI: alpha weights the pair-energy regularizer
    (methods metric and lifted), beta the Sobolev energy (method sobolev),
    gamma the length term of the product metric, s and p the kernel, n_rho
    the mollifier radius.  After fit the reconstruction is in ``field_``
    (VectorField, or a 1-normalized AngleField for lifted), the solver
    record in ``result_``.
    """

    def __init__(
        self,
        method: str = "metric",
        operator: str = "ray",
        size: int = 32,
        extent: float = 1.0,
        quad_step: float | None = None,
        alpha: float = 0.1,
        beta: float = 0.1,
        gamma: float = 1.0,
        s: float = 0.49,
        p: float = 2.0,
        fid_p: float | None = None,
        n_rho: int = 2,
        sigma_rho: float | None = None,
        eps: float = 1e-3,
        r_max: float = 1.0,
        parameterization: str = "polar",
        init: str = "constant",
        init_noise_var: float = 0.003,
        seed: int = 0,
        step0: float = 1.0,
        shrink: float = 0.5,
        armijo_c: float = 1e-4,
        grad_tol: float = 1e-6,
        max_iters: int = 300,
        max_backtracks: int = 40,
        project: str = "final",
    ):
        self.method = method
        self.operator = operator
        self.size = size
        self.extent = extent
        self.quad_step = quad_step
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.s = s
        self.p = p
        self.fid_p = fid_p
        self.n_rho = n_rho
        self.sigma_rho = sigma_rho
        self.eps = eps
        self.r_max = r_max
        self.parameterization = parameterization
        self.init = init
        self.init_noise_var = init_noise_var
        self.seed = seed
        self.step0 = step0
        self.shrink = shrink
        self.armijo_c = armijo_c
        self.grad_tol = grad_tol
        self.max_iters = max_iters
        self.max_backtracks = max_backtracks
        self.project = project

    # ---- fitting ----

    def fit(
        self,
        X: Sinogram,
        y: VectorField | AngleField | None = None,
        init_params: np.ndarray | None = None,
    ):
        X = check_sinogram(X)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}, expected one of {INITS}")
        if self.project not in PROJECT_MODES:
            raise ValueError(f"unknown project mode {self.project!r}, expected one of {PROJECT_MODES}")
        grid = make_grid(self.size, self.extent)
        y = check_truth(y, self.method, grid)
        if self.init == "truth-perturbed" and y is None and init_params is None:
            raise ValueError("init 'truth-perturbed' needs the ground truth as y")
        if abs(X.extent - grid.extent) > 1e-12 * max(1.0, grid.extent):
            raise ValueError(f"sinogram extent {X.extent} does not match grid extent {grid.extent}")
        step = grid.h / 2.0 if self.quad_step is None else self.quad_step
        geom = Geometry(grid, X.offsets, X.angles, step)
        objective, project_fn = self._build_objective(X, geom)
        if init_params is not None:
            x0 = np.asarray(init_params, dtype=np.float64)
            if x0.shape != objective.shape:
                raise ValueError(
                    f"init_params must have shape {objective.shape}, got {x0.shape}"
                )
        else:
            x0 = self._initial_params(grid, y)
        result = minimize(
            objective,
            x0,
            GDParams(
                step0=self.step0,
                shrink=self.shrink,
                armijo_c=self.armijo_c,
                grad_tol=self.grad_tol,
                max_iters=self.max_iters,
                max_backtracks=self.max_backtracks,
            ),
            project=project_fn,
            project_each=self.project == "per-iter",
        )
        self.result_ = result
        self.params_ = result.x
        self.status_ = result.status
        self.n_iter_ = result.iterations
        self.objective_ = result.value
        self.field_ = self._to_field(grid, result.x)
        return self

    def score(self, X: Sinogram, y: VectorField | AngleField) -> float:
        """snr of the fitted reconstruction against y, in dB."""
        if y is None:
            raise ValueError("score needs a ground-truth field")
        return snr(y, self.field_)

    # ---- internals ----

    def _lifted_cfg(self, grid: Grid) -> RegConfig:
        mol = make_mollifier(self.n_rho, grid.h, self.sigma_rho)
        return RegConfig(self.s, self.p, self.alpha, MetricSpec("sphere"), mol)

    def _metric_cfg(self, grid: Grid) -> RegConfig:
        mol = make_mollifier(self.n_rho, grid.h, self.sigma_rho)
        spec = MetricSpec("product", gamma=self.gamma, eps=self.eps, r_max=self.r_max)
        return RegConfig(self.s, self.p, self.alpha, spec, mol)

    def _build_objective(self, X: Sinogram, geom: Geometry):
        if self.method == "lifted":
            if self.operator != "radon":
                raise ValueError("lifted reconstruction needs operator 'radon'")
            cfg = self._lifted_cfg(geom.grid)
            fid_p = 2.0 if self.fid_p is None else self.fid_p
            two_pi = 2.0 * np.pi

            def project_fn(u):
                return two_pi * project_angle(u / two_pi)

            return make_lifted_objective(X, geom, cfg, fid_p), project_fn
        if self.method == "metric":
            cfg = self._metric_cfg(geom.grid)
            obj = reconstruction_objective(
                X, geom, cfg, self.operator, self.parameterization, self.fid_p
            )
            if self.parameterization == "polar":

                def project_fn(params):
                    out = params.copy()
                    out[..., 0] = project_angle(params[..., 0])
                    out[..., 1] = np.clip(params[..., 1], self.eps, self.r_max)
                    return out

            else:

                def project_fn(params):
                    return project_annulus(params, self.eps, self.r_max)

            return obj, project_fn
        return (
            sobolev_objective(X, geom, self.beta, self.p, self.operator, self.fid_p),
            None,
        )

    def _initial_params(self, grid: Grid, y) -> np.ndarray:
        H, W = grid.H, grid.W
        rng = rng_for(self.seed, INIT_STREAM)
        sigma = np.sqrt(self.init_noise_var)
        if self.method == "lifted":
            if self.init == "truth-perturbed":
                return y.radians() + sigma * rng.standard_normal((H, W))
            return np.zeros((H, W))
        if self.method == "metric" and self.parameterization == "polar":
            if self.init == "truth-perturbed":
                theta = project_angle(np.arctan2(y.data[..., 1], y.data[..., 0]) / (2.0 * np.pi))
                ell = np.linalg.norm(y.data, axis=-1)
                params = np.stack([theta, ell], axis=-1)
                return params + sigma * rng.standard_normal((H, W, 2))
            params = np.zeros((H, W, 2))
            if self.init == "constant":
                params[..., 1] = 0.5 * (self.eps + self.r_max)
            return params
        # cartesian vector parameters (metric cartesian and sobolev)
        if self.init == "truth-perturbed":
            return y.data + sigma * rng.standard_normal((H, W, 2))
        params = np.zeros((H, W, 2))
        if self.init == "constant":
            params[..., 0] = 0.5 * (self.eps + self.r_max)
        return params

    def _to_field(self, grid: Grid, params: np.ndarray):
        if self.method == "lifted":
            return AngleField(grid, project_angle(params / (2.0 * np.pi)), normalized=True)
        if self.method == "metric" and self.parameterization == "polar":
            ang = 2.0 * np.pi * params[..., 0]
            ell = np.clip(params[..., 1], self.eps, self.r_max)
            return VectorField(
                grid, np.stack([ell * np.cos(ang), ell * np.sin(ang)], axis=-1)
            )
        return VectorField(grid, params)
