"""
Projection of 3D Gaussians to screen-space splats
Shared by both renderers: tile preprocessing and Gaussian-wise stage II/III
"""

from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from app.gs_math.raster import PixelRect, footprint_rects
from app.gs_math.sh import eval_sh_batch, view_directions
from app.gs_math.transforms import (
    SymMat2,
    build_covariance3d_batch,
    eigenvalues_2x2_batch,
    invert_2x2_batch,
    jacobian_batch,
    project_covariance_batch,
    project_to_screen_batch,
    radius_3sigma_batch,
    radius_omega_sigma_batch,
    view_transform_batch,
)
from app.models.gaussian_model import GaussianModel
from app.models.schemas import Camera, RadiusLaw


class ProjectedGaussian(NamedTuple):
    """One screen-space splat"""
    mean2d: Tuple[float, float]
    depth: float
    inv_cov: SymMat2
    radius: int
    color: Tuple[float, float, float]
    log_opacity: float
    src: int


@dataclass
class ProjectedBatch:
    """
    Structure-of-arrays screen-space splats

    Attributes:
        src: source indices into the GaussianModel
        mx, my: projected centres in pixels
        depth: camera-space z
        cov: (N, 3) Sigma' entries (a, b, c)
        conic: (N, 3) inverse Sigma' entries
        lambda1, lambda2: Sigma' eigenvalues
        radius: footprint radius per the active law
        log_opacity: ln(opacity)
        color: (N, 3) RGB, zeros until colours are evaluated
    """
    src: np.ndarray
    mx: np.ndarray
    my: np.ndarray
    depth: np.ndarray
    cov: np.ndarray
    conic: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    radius: np.ndarray
    log_opacity: np.ndarray
    color: np.ndarray = field(default=None)
    colored: bool = False

    def __post_init__(self):
        if self.color is None:
            self.color = np.zeros((len(self.src), 3))

    def __len__(self) -> int:
        return int(self.src.shape[0])

    @classmethod
    def empty(cls) -> "ProjectedBatch":
        z = np.zeros(0)
        return cls(src=np.zeros(0, dtype=np.int64), mx=z, my=z, depth=z, cov=np.zeros((0, 3)),
                   conic=np.zeros((0, 3)), lambda1=z, lambda2=z,
                   radius=np.zeros(0, dtype=np.int64), log_opacity=z)

    def take(self, index: np.ndarray) -> "ProjectedBatch":
        index = np.asarray(index, dtype=np.int64)
        return ProjectedBatch(
            src=self.src[index], mx=self.mx[index], my=self.my[index], depth=self.depth[index],
            cov=self.cov[index], conic=self.conic[index], lambda1=self.lambda1[index],
            lambda2=self.lambda2[index], radius=self.radius[index],
            log_opacity=self.log_opacity[index], color=self.color[index], colored=self.colored,
        )

    def depth_order(self) -> np.ndarray:
        """Permutation sorting by (depth, source index)"""
        return np.lexsort((self.src, self.depth))

    def sorted(self) -> "ProjectedBatch":
        return self.take(self.depth_order())

    def footprints(self) -> Tuple[np.ndarray, ...]:
        return footprint_rects(self.mx, self.my, self.radius)

    def conic_of(self, i: int) -> Tuple[float, float, float]:
        return float(self.conic[i, 0]), float(self.conic[i, 1]), float(self.conic[i, 2])

    def item(self, i: int) -> ProjectedGaussian:
        return ProjectedGaussian(
            mean2d=(float(self.mx[i]), float(self.my[i])),
            depth=float(self.depth[i]),
            inv_cov=SymMat2(*self.conic_of(i)),
            radius=int(self.radius[i]),
            color=tuple(float(v) for v in self.color[i]),
            log_opacity=float(self.log_opacity[i]),
            src=int(self.src[i]),
        )

    def items(self):
        return [self.item(i) for i in range(len(self))]

    @classmethod
    def from_items(cls, items) -> "ProjectedBatch":
        """Batch from ProjectedGaussian records; cov and eigenvalues are derived from inv_cov"""
        if not items:
            return cls.empty()
        conic = np.array([[g.inv_cov.a, g.inv_cov.b, g.inv_cov.c] for g in items], dtype=np.float64)
        cov_a, cov_b, cov_c, _ = invert_2x2_batch(conic[:, 0], conic[:, 1], conic[:, 2])
        l1, l2 = eigenvalues_2x2_batch(cov_a, cov_b, cov_c)
        return cls(
            src=np.array([g.src for g in items], dtype=np.int64),
            mx=np.array([g.mean2d[0] for g in items], dtype=np.float64),
            my=np.array([g.mean2d[1] for g in items], dtype=np.float64),
            depth=np.array([g.depth for g in items], dtype=np.float64),
            cov=np.stack([cov_a, cov_b, cov_c], axis=1),
            conic=conic,
            lambda1=l1,
            lambda2=l2,
            radius=np.array([g.radius for g in items], dtype=np.int64),
            log_opacity=np.array([g.log_opacity for g in items], dtype=np.float64),
            color=np.array([g.color for g in items], dtype=np.float64),
            colored=True,
        )


@dataclass
class ProjectionResult:
    """Survivors plus per-reason cull counts"""
    batch: ProjectedBatch
    culled: Dict[str, int]


def project_gaussians(
    model: GaussianModel,
    indices: np.ndarray,
    cam: Camera,
    dilation: float,
    radius_law: RadiusLaw,
    scope: Optional[PixelRect] = None,
    cull_offscreen: bool = True,
) -> ProjectionResult:
    """
    View-transform, project and cull a subset of the model

    Culls, in order: depth <= znear, singular Sigma', radius 0, footprint outside scope.
    With cull_offscreen=False the last test is left to cull_to_scope().

    Args:
        model: Gaussian model
        indices: source indices to project, in processing order
        cam: Camera
        dilation: value added to both diagonal entries of Sigma'
        radius_law: footprint radius rule
        scope: inclusive pixel rectangle of the render target (whole image if omitted)

    Returns:
        ProjectionResult with survivors in input order
    """
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    culled = {"near": 0, "singular": 0, "radius": 0, "offscreen": 0}
    if scope is None:
        scope = (0, cam.width - 1, 0, cam.height - 1)

    mu_cam = view_transform_batch(model.positions[indices], cam)
    in_front = mu_cam[:, 2] > cam.znear
    culled["near"] = int(np.count_nonzero(~in_front))
    indices = indices[in_front]
    mu_cam = np.ascontiguousarray(mu_cam[in_front])
    if len(indices) == 0:
        return ProjectionResult(ProjectedBatch.empty(), culled)

    mx, my = project_to_screen_batch(mu_cam, cam)
    cov3d = build_covariance3d_batch(model.scales[indices], model.rotations[indices])
    jac = jacobian_batch(mu_cam, cam.fx, cam.fy)
    cov_a, cov_b, cov_c = project_covariance_batch(cov3d, cam.rotation, jac, dilation)
    inv_a, inv_b, inv_c, invertible = invert_2x2_batch(cov_a, cov_b, cov_c)
    lambda1, lambda2 = eigenvalues_2x2_batch(cov_a, cov_b, cov_c)
    if radius_law == RadiusLaw.OMEGA_SIGMA:
        radius = radius_omega_sigma_batch(lambda1, model.opacities[indices])
    else:
        radius = radius_3sigma_batch(lambda1)

    culled["singular"] = int(np.count_nonzero(~invertible))
    has_radius = radius > 0
    culled["radius"] = int(np.count_nonzero(invertible & ~has_radius))
    keep = invertible & has_radius

    if cull_offscreen:
        on_screen = footprints_in_scope(mx, my, radius, scope)
        culled["offscreen"] = int(np.count_nonzero(keep & ~on_screen))
        keep &= on_screen

    batch = ProjectedBatch(
        src=indices[keep],
        mx=mx[keep],
        my=my[keep],
        depth=mu_cam[keep, 2],
        cov=np.stack([cov_a[keep], cov_b[keep], cov_c[keep]], axis=1),
        conic=np.stack([inv_a[keep], inv_b[keep], inv_c[keep]], axis=1),
        lambda1=lambda1[keep],
        lambda2=lambda2[keep],
        radius=radius[keep],
        log_opacity=model.log_opacities[indices[keep]],
    )
    return ProjectionResult(batch, culled)


def footprints_in_scope(mx: np.ndarray, my: np.ndarray, radius: np.ndarray, scope: PixelRect) -> np.ndarray:
    x0, x1, y0, y1 = footprint_rects(mx, my, radius)
    return (x1 >= scope[0]) & (x0 <= scope[1]) & (y1 >= scope[2]) & (y0 <= scope[3])


def cull_to_scope(batch: ProjectedBatch, scope: PixelRect) -> Tuple[ProjectedBatch, int]:
    """Drop splats whose footprint misses the scope; returns (survivors, culled count)"""
    keep = footprints_in_scope(batch.mx, batch.my, batch.radius, scope)
    return batch.take(np.nonzero(keep)[0]), int(np.count_nonzero(~keep))


def color_batch(batch: ProjectedBatch, model: GaussianModel, cam: Camera) -> ProjectedBatch:
    """Evaluate SH colours for every splat of the batch (in place) and return it"""
    if len(batch):
        dirs = view_directions(model.positions[batch.src], cam.center)
        batch.color = eval_sh_batch(model.sh[batch.src], dirs)
    batch.colored = True
    return batch
