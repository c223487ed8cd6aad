"""
Splat Dataflow Lab - Numeric kernels
"""

from app.gs_math.exp_lut import ExpLut, build_exp_lut, get_exp_lut
from app.gs_math.projection import (
    ProjectedBatch,
    ProjectedGaussian,
    ProjectionResult,
    color_batch,
    cull_to_scope,
    project_gaussians,
)
from app.gs_math.raster import (
    ALPHA_MAX,
    alpha,
    alpha_values,
    blend_step,
    clip_rect,
    footprint_rect,
    quadratic_min_on_rect,
    support_level,
)
from app.gs_math.sh import eval_sh, eval_sh_batch
from app.gs_math.transforms import (
    SymMat2,
    build_covariance3d,
    eigenvalues_2x2,
    invert_2x2,
    jacobian,
    project_covariance,
    project_to_screen,
    radius_3sigma,
    radius_omega_sigma,
    view_transform,
)

__all__ = [
    "ALPHA_MAX",
    "ExpLut",
    "ProjectedBatch",
    "ProjectedGaussian",
    "ProjectionResult",
    "SymMat2",
    "alpha",
    "alpha_values",
    "blend_step",
    "build_covariance3d",
    "build_exp_lut",
    "clip_rect",
    "color_batch",
    "cull_to_scope",
    "eigenvalues_2x2",
    "eval_sh",
    "eval_sh_batch",
    "footprint_rect",
    "get_exp_lut",
    "invert_2x2",
    "jacobian",
    "project_covariance",
    "project_gaussians",
    "project_to_screen",
    "quadratic_min_on_rect",
    "radius_3sigma",
    "radius_omega_sigma",
    "support_level",
    "view_transform",
]
