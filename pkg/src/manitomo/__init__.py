"""Tomographic reconstruction of vector and circle-valued images.

Forward models: the channel-wise Radon transform and the 2-d ray transform
of plane vector fields.  Reconstruction minimizes a p-power data misfit
plus either a non-local metric pair energy (a mollified fractional-Sobolev
style double sum evaluated in the metric of the value manifold) or a
first-order Sobolev baseline, by projected gradient descent.
"""

from .estimators import Reconstructor
from .grid import (
    AngleField,
    FileFormatError,
    Grid,
    Sinogram,
    VectorField,
    make_grid,
    make_sinogram,
    pixel_centers,
    read_field,
    read_sinogram,
    write_field,
    write_sinogram,
)
from .metrics import (
    MetricSpec,
    Mollifier,
    angle_distance,
    angle_length_distance,
    circle_distance,
    euclidean_distance,
    make_mollifier,
    wrap_angle,
)
from .optimize import (
    GDParams,
    GDResult,
    minimize,
    project_angle,
    project_annulus,
)
from .phantoms import (
    NoiseSpec,
    add_noise,
    angle_phantom,
    rng_for,
    snr,
    vector_phantom,
)
from .regularizers import (
    Objective,
    RegConfig,
    data_fidelity,
    lifted_objective,
    make_lifted_objective,
    nonlocal_energy,
    nonlocal_energy_grad,
    reconstruction_objective,
    sobolev_energy,
    sobolev_objective,
)
from .transforms import (
    Geometry,
    make_geometry,
    radon_adjoint,
    radon_continuity_constant,
    radon_forward,
    ray_adjoint,
    ray_forward,
)

__version__ = "0.1.0"
