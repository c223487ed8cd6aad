"""
Tile-wise Baseline Renderer
Preprocess every Gaussian, bin splats to tiles, then blend per tile front-to-back
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

from app.cost_model.ledger import TrafficLedger
from app.gs_math.exp_lut import get_exp_lut
from app.gs_math.projection import ProjectedBatch, color_batch, cull_to_scope, project_gaussians
from app.gs_math.raster import alpha_values, clip_rect
from app.gs_math.transforms import radius_3sigma_batch
from app.models.gaussian_model import GaussianModel
from app.models.schemas import Camera, ExpMode, FrameStats, OutputImage, PipelineKind, RenderConfig
from app.pipelines.base import BasePipeline
from app.pipelines.framebuffer import FrameBuffer

logger = structlog.get_logger(__name__)

COVERAGE_COLUMNS = ["gaussian", "aabb_px", "obb_px", "alpha_px"]
COVERAGE_ALPHA_MIN = 1.0 / 255.0


@dataclass
class TileBinning:
    """
    Sorted Gaussian-tile key-value pairs

    Pairs are ordered by (tile, depth, source index); `ranges[t]` is the
    half-open slice of tile t's list.
    """
    tile_size: int
    tiles_x: int
    tiles_y: int
    tile_ids: np.ndarray
    refs: np.ndarray
    depths: np.ndarray
    ranges: np.ndarray

    @property
    def tile_count(self) -> int:
        return self.tiles_x * self.tiles_y

    @property
    def kv(self) -> List[Tuple[int, int, float]]:
        return list(zip(self.tile_ids.tolist(), self.refs.tolist(), self.depths.tolist()))

    def tile_list(self, tile: int) -> np.ndarray:
        start, end = self.ranges[tile]
        return self.refs[start:end]

    def tile_rect(self, tile: int, width: int, height: int) -> Tuple[int, int, int, int]:
        tx, ty = tile % self.tiles_x, tile // self.tiles_x
        x0, y0 = tx * self.tile_size, ty * self.tile_size
        return x0, min(x0 + self.tile_size, width) - 1, y0, min(y0 + self.tile_size, height) - 1


# =============================================================================
# STAGES
# =============================================================================

def preprocess_all(
    model: GaussianModel,
    cam: Camera,
    cfg: RenderConfig,
    ledger: TrafficLedger,
    stats: Optional[FrameStats] = None,
) -> ProjectedBatch:
    """
    Project and colour every Gaussian of the model

    Every input Gaussian costs one full attribute load; SH colour is evaluated
    for every projectable splat before the screen-bounds cull.
    """
    n = model.count
    ledger.record("gauss3d_attr", count=n, stage="preprocess")
    ledger.count("projections", n)
    result = project_gaussians(model, np.arange(n), cam, cfg.dilation, cfg.radius_law,
                               cull_offscreen=False)
    batch = result.batch
    if len(batch):
        ledger.record("sh_coeff", count=len(batch), stage="preprocess")
        ledger.count("sh_evals", len(batch))
    color_batch(batch, model, cam)
    batch, offscreen = cull_to_scope(batch, (0, cam.width - 1, 0, cam.height - 1))
    result.culled["offscreen"] = offscreen
    ledger.record("ellipse2d", count=len(batch), stage="preprocess")

    if stats is not None:
        stats.gaussians_in = n
        stats.culled_near = result.culled["near"]
        stats.culled_singular = result.culled["singular"]
        stats.culled_radius = result.culled["radius"]
        stats.culled_offscreen = offscreen
        stats.rendered = len(batch)
    logger.debug("preprocess_completed", gaussians=n, survivors=len(batch), **result.culled)
    return batch


def bin_to_tiles(projected: ProjectedBatch, cam: Camera, cfg: RenderConfig, ledger: TrafficLedger) -> TileBinning:
    """Emit one key-value pair per (splat, overlapped tile) and sort them"""
    ts = cfg.tile_size
    tiles_x = -(-cam.width // ts)
    tiles_y = -(-cam.height // ts)

    x0, x1, y0, y1 = projected.footprints()
    valid = (x1 >= 0) & (x0 <= cam.width - 1) & (y1 >= 0) & (y0 <= cam.height - 1)
    tx0 = np.clip(x0, 0, cam.width - 1) // ts
    tx1 = np.clip(x1, 0, cam.width - 1) // ts
    ty0 = np.clip(y0, 0, cam.height - 1) // ts
    ty1 = np.clip(y1, 0, cam.height - 1) // ts
    nx = tx1 - tx0 + 1
    counts = np.where(valid, nx * (ty1 - ty0 + 1), 0)

    refs = np.repeat(np.arange(len(projected), dtype=np.int64), counts)
    offsets = np.arange(len(refs), dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    tile_ids = (ty0[refs] + offsets // nx[refs]) * tiles_x + (tx0[refs] + offsets % nx[refs])
    depths = projected.depth[refs]

    order = np.lexsort((projected.src[refs], depths, tile_ids))
    tile_ids, refs, depths = tile_ids[order], refs[order], depths[order]
    bounds = np.searchsorted(tile_ids, np.arange(tiles_x * tiles_y + 1))
    ranges = np.stack([bounds[:-1], bounds[1:]], axis=1)

    ledger.record("kv_pair", count=len(refs), stage="binning")
    ledger.count("sort_keys", len(refs))
    logger.debug("tiles_binned", pairs=len(refs), tiles=tiles_x * tiles_y)
    return TileBinning(ts, tiles_x, tiles_y, tile_ids, refs, depths, ranges)


def _render_tile(
    tile: int,
    bins: TileBinning,
    projected: ProjectedBatch,
    fb: FrameBuffer,
    cfg: RenderConfig,
    footprints: Tuple[np.ndarray, ...],
) -> Tuple[TrafficLedger, int]:
    """Blend one tile into fb; returns the tile's private ledger and pairs visited"""
    ledger = TrafficLedger(f"tile-{tile}")
    refs = bins.tile_list(tile)
    if len(refs) == 0:
        return ledger, 0
    lut = get_exp_lut() if cfg.exp_mode == ExpMode.LUT else None
    tile_rect = bins.tile_rect(tile, fb.width, fb.height)
    fx0, fx1, fy0, fy1 = footprints

    visited = 0
    alpha_evals = 0
    blended = 0
    for ref in refs:
        if not fb.rect_active(tile_rect):
            break
        visited += 1
        rect = clip_rect((int(fx0[ref]), int(fx1[ref]), int(fy0[ref]), int(fy1[ref])), tile_rect)
        xs, ys = fb.rect_pixels(rect)
        live = fb.active(xs, ys)
        xs, ys = xs[live], ys[live]
        values = alpha_values(xs + 0.5, ys + 0.5, projected.mx[ref], projected.my[ref],
                              projected.conic_of(ref), projected.log_opacity[ref], cfg.exp_mode, lut)
        alpha_evals += len(xs)
        keep = values >= cfg.alpha_min
        blended += fb.blend(xs[keep], ys[keep], values[keep], projected.color[ref])

    ledger.record("ellipse2d", gaussians=projected.src[refs[:visited]], stage="render")
    ledger.record("kv_pair", count=visited, stage="render")
    ledger.count("alpha_evals", alpha_evals)
    ledger.count("blend_steps", blended)
    return ledger, visited


def render_tiles(
    bins: TileBinning,
    projected: ProjectedBatch,
    cam: Camera,
    cfg: RenderConfig,
    ledger: TrafficLedger,
    threads: int = 1,
    stats: Optional[FrameStats] = None,
) -> OutputImage:
    """
    Blend every tile's sorted list into a fresh frame buffer

    Tiles write disjoint pixels, so they may run on worker threads; their
    ledgers merge in tile order.
    """
    fb = FrameBuffer(cam.width, cam.height, block_size=cfg.tile_size,
                     term_threshold=cfg.term_threshold, early_termination=cfg.early_termination)

    footprints = projected.footprints()

    def work(tile: int):
        return _render_tile(tile, bins, projected, fb, cfg, footprints)

    tiles = range(bins.tile_count)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tiles))
    else:
        results = [work(tile) for tile in tiles]

    visited = 0
    for tile_ledger, pairs in results:
        ledger.merge(tile_ledger)
        visited += pairs
    ledger.record("image_rw", count=cam.width * cam.height, stage="output")
    if stats is not None:
        stats.tiles_visited = sum(1 for _, pairs in results if pairs)
    logger.debug("tiles_rendered", tiles=bins.tile_count, pairs_visited=visited)
    return fb.finalize(cfg.background)


def render_frame(
    model: GaussianModel,
    cam: Camera,
    cfg: RenderConfig,
    ledger: TrafficLedger,
    threads: int = 1,
    stats: Optional[FrameStats] = None,
) -> OutputImage:
    """preprocess -> bin -> render"""
    projected = preprocess_all(model, cam, cfg, ledger, stats)
    bins = bin_to_tiles(projected, cam, cfg, ledger)
    return render_tiles(bins, projected, cam, cfg, ledger, threads, stats)


# =============================================================================
# COVERAGE STATISTICS
# =============================================================================

def _principal_axis(a: float, b: float, c: float, lambda1: float) -> Tuple[float, float]:
    if abs(b) > 1e-12:
        vx, vy = b, lambda1 - a
    elif a >= c:
        vx, vy = 1.0, 0.0
    else:
        vx, vy = 0.0, 1.0
    norm = np.hypot(vx, vy)
    return vx / norm, vy / norm


def coverage_counts(projected: ProjectedBatch, cam: Camera) -> pd.DataFrame:
    """
    Rendered-pixel counts per splat for three footprint models

    aabb_px: square of half-width radius_3sigma; obb_px: pixel centres inside the
    3-sigma oriented rectangle; alpha_px: pixels with exact alpha >= 1/255.
    All counts are clipped to the image.
    """
    rows = []
    screen = (0, cam.width - 1, 0, cam.height - 1)
    radius = radius_3sigma_batch(projected.lambda1)
    fx0, fx1, fy0, fy1 = np.floor(projected.mx - radius), np.floor(projected.mx + radius), \
        np.floor(projected.my - radius), np.floor(projected.my + radius)
    for i in range(len(projected)):
        counts = {"gaussian": int(projected.src[i]), "aabb_px": 0, "obb_px": 0, "alpha_px": 0}
        rect = clip_rect((int(fx0[i]), int(fx1[i]), int(fy0[i]), int(fy1[i])), screen)
        if rect is not None:
            ys, xs = np.mgrid[rect[2]:rect[3] + 1, rect[0]:rect[1] + 1]
            px = xs.ravel() + 0.5
            py = ys.ravel() + 0.5
            counts["aabb_px"] = int(px.size)

            a, b, c = projected.cov[i]
            ux, uy = _principal_axis(a, b, c, projected.lambda1[i])
            dx = px - projected.mx[i]
            dy = py - projected.my[i]
            along = np.abs(dx * ux + dy * uy)
            across = np.abs(-dx * uy + dy * ux)
            inside = (along <= 3.0 * np.sqrt(projected.lambda1[i])) & \
                (across <= 3.0 * np.sqrt(max(projected.lambda2[i], 0.0)))
            counts["obb_px"] = int(np.count_nonzero(inside))

            values = alpha_values(px, py, projected.mx[i], projected.my[i], projected.conic_of(i),
                                  projected.log_opacity[i], ExpMode.EXACT)
            counts["alpha_px"] = int(np.count_nonzero(values >= COVERAGE_ALPHA_MIN))
        rows.append(counts)
    return pd.DataFrame(rows, columns=COVERAGE_COLUMNS)


# =============================================================================
# PIPELINE
# =============================================================================

class TilePipeline(BasePipeline):
    """
    Baseline renderer: preprocess everything, then tile-wise blending
    """

    kind = PipelineKind.TILE

    def __init__(self, cfg: Optional[RenderConfig] = None, threads: int = 1):
        super().__init__(threads)
        self.cfg = cfg or RenderConfig()

    def render(self, model: GaussianModel, cam: Camera, ledger: TrafficLedger) -> Tuple[OutputImage, FrameStats]:
        stats = FrameStats(pipeline=self.kind)
        self.enter("preprocess")
        projected = preprocess_all(model, cam, self.cfg, ledger, stats)
        self.enter("binning")
        bins = bin_to_tiles(projected, cam, self.cfg, ledger)
        self.enter("render")
        image = render_tiles(bins, projected, cam, self.cfg, ledger, self.threads, stats)
        return image, stats
