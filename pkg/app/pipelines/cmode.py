"""
Compatibility mode: render the frame as independent square sub-views
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
import structlog

from app.cost_model.ledger import TrafficLedger
from app.exceptions import ConfigError
from app.gs_math.projection import project_gaussians
from app.gs_math.raster import PixelRect, footprint_rects
from app.models.gaussian_model import GaussianModel
from app.models.schemas import Camera, FrameStats, GccConfig, OutputImage, PipelineKind
from app.pipelines.gcc import DepthGroup, new_framebuffer, render_gcc, render_scope, stage1_group

logger = structlog.get_logger(__name__)


def subview_rects(width: int, height: int, size: int) -> List[PixelRect]:
    """Row-major inclusive rectangles of the ceil(W/s) x ceil(H/s) sub-view grid"""
    return [
        (x0, min(x0 + size, width) - 1, y0, min(y0 + size, height) - 1)
        for y0 in range(0, height, size)
        for x0 in range(0, width, size)
    ]


def bin_to_subviews(
    groups: List[DepthGroup],
    model: GaussianModel,
    cam: Camera,
    cfg: GccConfig,
    rects: List[PixelRect],
    ledger: TrafficLedger,
) -> List[List[DepthGroup]]:
    """
    Assign each grouped Gaussian to every sub-view its footprint overlaps

    Returns per sub-view the groups restricted to their members there, in
    the original near-to-far order; empty groups are dropped.
    """
    if not groups:
        return [[] for _ in rects]
    retained = np.concatenate([group.indices for group in groups])
    ledger.record("gauss_position", count=len(retained), stage="binning")
    ledger.record("gauss_shape", count=len(retained), stage="binning")
    ledger.count("projections", len(retained))
    batch = project_gaussians(model, retained, cam, cfg.dilation, cfg.radius_law,
                              cull_offscreen=False).batch

    # Unprojectable Gaussians keep an empty rectangle (x0 > x1)
    fx0 = np.ones(model.count, dtype=np.int64)
    fx1 = np.zeros(model.count, dtype=np.int64)
    fy0 = np.ones(model.count, dtype=np.int64)
    fy1 = np.zeros(model.count, dtype=np.int64)
    x0, x1, y0, y1 = footprint_rects(batch.mx, batch.my, batch.radius)
    fx0[batch.src], fx1[batch.src], fy0[batch.src], fy1[batch.src] = x0, x1, y0, y1

    per_view: List[List[DepthGroup]] = []
    for rect in rects:
        overlap = (fx0 <= fx1) & (fx1 >= rect[0]) & (fx0 <= rect[1]) & (fy1 >= rect[2]) & (fy0 <= rect[3])
        view_groups = [group.subset(overlap[group.indices]) for group in groups]
        view_groups = [group for group in view_groups if len(group)]
        ledger.record("subview_bind", count=sum(len(group) for group in view_groups), stage="binning")
        per_view.append(view_groups)
    return per_view


def render_cmode(
    model: GaussianModel,
    cam: Camera,
    cfg: GccConfig,
    ledger: TrafficLedger,
    threads: int = 1,
    stats: Optional[FrameStats] = None,
) -> OutputImage:
    """
    Render each sub-view as its own scope and stitch the results

    A single sub-view is exactly a full-frame render. Sub-views run in
    parallel when threads > 1; their ledgers merge in row-major order.

    Raises:
        ConfigError: sub-view size missing or smaller than the block size
    """
    size = cfg.cmode
    if size is None or size < cfg.block_size:
        raise ConfigError(f"sub-view size {size} must be set and at least block_size {cfg.block_size}")
    stats = stats if stats is not None else FrameStats(pipeline=PipelineKind.GCC)
    stats.gaussians_in = model.count
    rects = subview_rects(cam.width, cam.height, size)
    stats.subviews = len(rects)
    if len(rects) == 1:
        return render_gcc(model, cam, cfg, ledger, stats)

    groups = stage1_group(model, cam, cfg, ledger)
    per_view = bin_to_subviews(groups, model, cam, cfg, rects, ledger)

    def work(view: int) -> Tuple[np.ndarray, TrafficLedger, FrameStats]:
        view_ledger = TrafficLedger(f"subview-{view}")
        view_stats = FrameStats(pipeline=PipelineKind.GCC)
        fb = new_framebuffer(cfg, rects[view], frame=(0, cam.width - 1, 0, cam.height - 1))
        render_scope(per_view[view], model, cam, cfg, view_ledger, fb, view_stats)
        return fb.composite(cfg.background), view_ledger, view_stats

    views = range(len(rects))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, views))
    else:
        results = [work(view) for view in views]

    rgb = np.zeros((cam.height, cam.width, 3))
    for rect, (pixels, view_ledger, view_stats) in zip(rects, results):
        rgb[rect[2]:rect[3] + 1, rect[0]:rect[1] + 1] = pixels
        ledger.merge(view_ledger)
        stats.absorb(view_stats)
    logger.debug("subviews_rendered", subviews=len(rects), size=size,
                 attr_bytes=ledger.category_bytes("gauss3d_attr"))
    return OutputImage(rgb=rgb)
