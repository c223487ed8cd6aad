"""
Gaussian-wise Renderer with Cross-stage Conditional Processing

Stage I groups Gaussians by depth from positions alone. Groups then flow
near-to-far through projection (II), colour and sort (III) and Gaussian-wise
blending (IV); once every block of the render scope is saturated, the
remaining groups are never loaded.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import structlog

from app.cost_model.ledger import TrafficLedger
from app.gs_math.exp_lut import ExpLut, get_exp_lut
from app.gs_math.projection import ProjectedBatch, ProjectedGaussian, color_batch, project_gaussians
from app.gs_math.raster import PixelRect
from app.gs_math.transforms import view_transform_batch
from app.models.gaussian_model import GaussianModel
from app.models.schemas import (
    BoundaryMode,
    Camera,
    ExpMode,
    FrameStats,
    GccConfig,
    OutputImage,
    PipelineKind,
)
from app.pipelines.base import BasePipeline
from app.pipelines.boundary import pixel_component, traverse_blocks
from app.pipelines.framebuffer import FrameBuffer

logger = structlog.get_logger(__name__)


@dataclass
class DepthGroup:
    """
    Gaussians of one depth slice, sorted by (depth, index)

    The depth range is closed: an equal-depth run split by index shares its
    depth with the neighbouring group.
    """
    indices: np.ndarray
    depths: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @property
    def depth_range(self) -> Tuple[float, float]:
        return float(self.depths[0]), float(self.depths[-1])

    @property
    def members(self) -> List[Tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.depths.tolist()))

    def subset(self, keep: np.ndarray) -> "DepthGroup":
        return DepthGroup(self.indices[keep], self.depths[keep])


def _split_group(indices: np.ndarray, depths: np.ndarray, cap: int) -> List[DepthGroup]:
    """Split near the median at a depth change; equal-depth runs split evenly by position"""
    if len(indices) <= cap:
        return [DepthGroup(indices, depths)]
    mid = len(indices) // 2
    changes = np.nonzero(depths[1:] > depths[:-1])[0] + 1
    cut = int(changes[np.argmin(np.abs(changes - mid))]) if changes.size else mid
    return (_split_group(indices[:cut], depths[:cut], cap)
            + _split_group(indices[cut:], depths[cut:], cap))


# =============================================================================
# STAGES
# =============================================================================

def stage1_group(model: GaussianModel, cam: Camera, cfg: GccConfig, ledger: TrafficLedger) -> List[DepthGroup]:
    """
    Depth-group the model near-to-far using positions only

    Gaussians nearer than depth_threshold are dropped; the rest go to uniform
    bins over [threshold, max depth], and bins above group_cap are split
    recursively.
    """
    n = model.count
    if n == 0:
        return []
    ledger.record("gauss_position", count=n, stage="stage1")
    ledger.count("depth_evals", n)
    depths = view_transform_batch(model.positions, cam)[:, 2]
    retained = np.nonzero(depths >= cfg.depth_threshold)[0]
    if len(retained) == 0:
        return []

    depth = depths[retained]
    order = np.lexsort((retained, depth))
    retained, depth = retained[order], depth[order]
    ledger.record("depth_id", count=len(retained), stage="stage1")
    ledger.count("sort_keys", len(retained))

    span = float(depth[-1]) - cfg.depth_threshold
    if span > 0.0:
        bins = np.minimum(((depth - cfg.depth_threshold) / span * cfg.initial_bins).astype(np.int64),
                          cfg.initial_bins - 1)
    else:
        bins = np.zeros(len(depth), dtype=np.int64)
    starts = np.concatenate([[0], np.nonzero(bins[1:] != bins[:-1])[0] + 1, [len(bins)]])

    groups: List[DepthGroup] = []
    for lo, hi in zip(starts[:-1], starts[1:]):
        groups.extend(_split_group(retained[lo:hi], depth[lo:hi], cfg.group_cap))
    logger.debug("depth_grouped", gaussians=n, retained=len(retained), groups=len(groups))
    return groups


def stage2_project(
    group: DepthGroup,
    model: GaussianModel,
    cam: Camera,
    cfg: GccConfig,
    ledger: TrafficLedger,
    scope: Optional[PixelRect] = None,
    stats: Optional[FrameStats] = None,
) -> ProjectedBatch:
    """Load full attributes for a group and project it; colours stay unset"""
    ledger.record("depth_id", count=len(group), stage="stage2")
    ledger.record("gauss3d_attr", gaussians=group.indices, stage="stage2")
    ledger.count("projections", len(group))
    result = project_gaussians(model, group.indices, cam, cfg.dilation, cfg.radius_law, scope)
    if stats is not None:
        stats.culled_near += result.culled["near"]
        stats.culled_singular += result.culled["singular"]
        stats.culled_radius += result.culled["radius"]
        stats.culled_offscreen += result.culled["offscreen"]
    return result.batch


def stage3_color_sort(
    projected: ProjectedBatch,
    group: DepthGroup,
    model: GaussianModel,
    cam: Camera,
    cfg: GccConfig,
    ledger: TrafficLedger,
) -> ProjectedBatch:
    """SH colour for stage II survivors only, then (depth, index) order"""
    n = len(projected)
    if n:
        ledger.record("sh_coeff", gaussians=projected.src, stage="stage3")
        ledger.count("sh_evals", n)
        ledger.count("sort_keys", n)
    return color_batch(projected, model, cam).sorted()


def stage4_blend(
    g: ProjectedGaussian,
    fb: FrameBuffer,
    cfg: GccConfig,
    ledger: TrafficLedger,
    lut: Optional[ExpLut] = None,
) -> int:
    """
    Blend one splat over its effective pixels; returns the number of blend steps

    Pixels with T < term_threshold are skipped, and blocks saturated by this
    splat are masked afterwards.
    """
    if cfg.boundary_mode == BoundaryMode.PIXEL_BFS:
        # seed and component come from the whole frame so sub-views agree with it
        component = pixel_component(g, fb.frame_rect, cfg, lut)
        inside = fb.in_scope(component.xs, component.ys)
        xs, ys, values = component.xs[inside], component.ys[inside], component.alpha[inside]
        live = fb.active(xs, ys)
        ledger.count("boundary_evals", component.searched)
        ledger.count("alpha_evals", int(np.count_nonzero(live)))
    else:
        traversal = traverse_blocks(g, fb, cfg, lut)
        ledger.count("boundary_evals", traversal.support_tests)
        ledger.count("alpha_evals", traversal.alpha_evals)
        if not traversal.visits:
            return 0
        xs = np.concatenate([v.xs[v.passing] for v in traversal.visits])
        ys = np.concatenate([v.ys[v.passing] for v in traversal.visits])
        values = np.concatenate([v.alpha[v.passing] for v in traversal.visits])
        live = fb.active(xs, ys)

    xs, ys, values = xs[live], ys[live], values[live]
    blended = fb.blend(xs, ys, values, np.asarray(g.color))
    ledger.count("blend_steps", blended)
    fb.refresh_mask(fb.blocks_of_pixels(xs, ys))
    return blended


# =============================================================================
# FRAME
# =============================================================================

def new_framebuffer(cfg: GccConfig, scope: PixelRect, frame: Optional[PixelRect] = None) -> FrameBuffer:
    return FrameBuffer(
        width=scope[1] - scope[0] + 1,
        height=scope[3] - scope[2] + 1,
        block_size=cfg.block_size,
        term_threshold=cfg.term_threshold,
        early_termination=cfg.early_termination,
        origin_x=scope[0],
        origin_y=scope[2],
        frame=frame,
    )


def render_scope(
    groups: List[DepthGroup],
    model: GaussianModel,
    cam: Camera,
    cfg: GccConfig,
    ledger: TrafficLedger,
    fb: FrameBuffer,
    stats: Optional[FrameStats] = None,
) -> FrameBuffer:
    """
    Stages II-IV over groups into one frame buffer

    Before each group, a fully masked buffer ends the frame: later groups
    are neither loaded nor coloured.
    """
    stats = stats if stats is not None else FrameStats(pipeline=PipelineKind.GCC)
    lut = get_exp_lut() if cfg.exp_mode == ExpMode.LUT else None
    stats.groups_total += len(groups)
    for position, group in enumerate(groups):
        if fb.all_masked():
            stats.groups_skipped += len(groups) - position
            logger.debug("groups_skipped", scope=fb.scope, skipped=len(groups) - position)
            break
        projected = stage2_project(group, model, cam, cfg, ledger, fb.scope, stats)
        ordered = stage3_color_sort(projected, group, model, cam, cfg, ledger)
        for i in range(len(ordered)):
            stage4_blend(ordered.item(i), fb, cfg, ledger, lut)
        stats.groups_processed += 1
        stats.rendered += len(ordered)
    ledger.record("image_rw", count=fb.width * fb.height, stage="output")
    return fb


def render_gcc(
    model: GaussianModel,
    cam: Camera,
    cfg: GccConfig,
    ledger: TrafficLedger,
    stats: Optional[FrameStats] = None,
) -> OutputImage:
    """Full-frame render: stage I, then stages II-IV per group, composited over background"""
    if stats is not None:
        stats.gaussians_in = model.count
    groups = stage1_group(model, cam, cfg, ledger)
    fb = new_framebuffer(cfg, (0, cam.width - 1, 0, cam.height - 1))
    render_scope(groups, model, cam, cfg, ledger, fb, stats)
    return fb.finalize(cfg.background)


class GccPipeline(BasePipeline):
    """
    Gaussian-wise renderer; compatibility mode when cfg.cmode is set
    """

    kind = PipelineKind.GCC

    def __init__(self, cfg: Optional[GccConfig] = None, threads: int = 1):
        super().__init__(threads)
        self.cfg = cfg or GccConfig()

    def render(self, model: GaussianModel, cam: Camera, ledger: TrafficLedger) -> Tuple[OutputImage, FrameStats]:
        stats = FrameStats(pipeline=self.kind, gaussians_in=model.count)
        if self.cfg.cmode is not None:
            from app.pipelines.cmode import render_cmode

            self.enter("cmode")
            return render_cmode(model, cam, self.cfg, ledger, threads=self.threads, stats=stats), stats
        self.enter("stage1")
        groups = stage1_group(model, cam, self.cfg, ledger)
        self.enter("stages2-4")
        fb = new_framebuffer(self.cfg, (0, cam.width - 1, 0, cam.height - 1))
        render_scope(groups, model, cam, self.cfg, ledger, fb, stats)
        stats.subviews = 1
        return fb.finalize(self.cfg.background), stats
