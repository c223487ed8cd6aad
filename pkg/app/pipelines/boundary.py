"""
Boundary Identification
Finds the pixels a splat actually influences, either pixel by pixel (8-connected
region growing from a seed) or block by block with octant pruning
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Set, Tuple

import numpy as np
from scipy import ndimage

from app.gs_math.exp_lut import ExpLut, get_exp_lut
from app.gs_math.projection import ProjectedGaussian
from app.gs_math.raster import (
    PixelRect,
    Rect,
    alpha_values,
    clip_rect,
    ellipse_bounds,
    ellipse_row_spans,
    footprint_rect,
    pixel_rect_area,
    quadratic_min_on_rect,
    support_level,
)
from app.models.schemas import ExpMode, GccConfig
from app.pipelines.framebuffer import FrameBuffer

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# N, NE, E, SE, S, SW, W, NW on the block grid (y grows downwards)
OCTANTS: Tuple[Tuple[int, int], ...] = (
    (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1),
)


def _lut_for(cfg: GccConfig, lut: Optional[ExpLut]) -> Optional[ExpLut]:
    if cfg.exp_mode != ExpMode.LUT:
        return None
    return lut or get_exp_lut()


def _conic(g: ProjectedGaussian) -> Tuple[float, float, float]:
    return g.inv_cov.a, g.inv_cov.b, g.inv_cov.c


def seed_pixel(g: ProjectedGaussian, fp: PixelRect) -> Tuple[int, int]:
    """
    Nearest in-bounds pixel to the splat centre

    The pixel containing the point of the clipped footprint area with the
    smallest Mahalanobis distance; for an in-bounds centre that is the centre's pixel.
    """
    _, (px, py) = quadratic_min_on_rect(g.mean2d[0], g.mean2d[1], _conic(g), pixel_rect_area(fp))
    sx = min(max(int(math.floor(px)), fp[0]), fp[1])
    sy = min(max(int(math.floor(py)), fp[2]), fp[3])
    return sx, sy


# =============================================================================
# PIXEL REGION GROWING
# =============================================================================

@dataclass
class PixelComponent:
    """Seed-connected passing pixels of one splat"""
    xs: np.ndarray
    ys: np.ndarray
    alpha: np.ndarray
    searched: int = 0

    @classmethod
    def empty(cls, searched: int = 0) -> "PixelComponent":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, np.zeros(0), searched)

    def __len__(self) -> int:
        return int(self.xs.shape[0])

    def pixels(self) -> Set[Tuple[int, int]]:
        return set(zip(self.xs.tolist(), self.ys.tolist()))


def pixel_component(
    g: ProjectedGaussian, scope: PixelRect, cfg: GccConfig, lut: Optional[ExpLut] = None
) -> PixelComponent:
    """
    8-connected component of {p : alpha(p) >= alpha_min} containing the seed

    The component is found by labelling the whole clipped footprint at once, so
    the work counters are modelled, not counted from a real search. `searched`
    is what a breadth-first search from the seed would test: the component plus
    its 8-neighbour ring inside the footprint (1 when the seed fails). Callers
    charge alpha evaluations as the live component pixels. Pixels outside the
    clipped footprint fail without an evaluation.
    """
    fp = clip_rect(footprint_rect(g.mean2d, g.radius), scope)
    if fp is None:
        return PixelComponent.empty()
    sx, sy = seed_pixel(g, fp)
    ys, xs = np.mgrid[fp[2]:fp[3] + 1, fp[0]:fp[1] + 1]
    values = alpha_values(xs + 0.5, ys + 0.5, g.mean2d[0], g.mean2d[1], _conic(g),
                          g.log_opacity, cfg.exp_mode, _lut_for(cfg, lut))
    passing = values >= cfg.alpha_min
    seed = (sy - fp[2], sx - fp[0])
    if not passing[seed]:
        return PixelComponent.empty(searched=1)

    labels, _ = ndimage.label(passing, structure=EIGHT_CONNECTED)
    component = labels == labels[seed]
    ring = ndimage.binary_dilation(component, structure=EIGHT_CONNECTED)
    return PixelComponent(xs[component], ys[component], values[component],
                          searched=int(np.count_nonzero(ring)))


def identify_boundary_pixels(
    g: ProjectedGaussian,
    width: int,
    height: int,
    cfg: Optional[GccConfig] = None,
    origin: Tuple[int, int] = (0, 0),
) -> Set[Tuple[int, int]]:
    """
    Pixels influenced by g, found by region growing from the nearest in-bounds pixel

    Returns:
        Set of (x, y); empty when the seed itself fails alpha_min
    """
    cfg = cfg or GccConfig()
    scope = (origin[0], origin[0] + width - 1, origin[1], origin[1] + height - 1)
    return pixel_component(g, scope, cfg).pixels()


# =============================================================================
# BLOCK TRAVERSAL
# =============================================================================

@dataclass
class TraversalState:
    """Visited map and FIFO queue over the block grid"""
    visited: np.ndarray
    queue: Deque[Tuple[int, int]] = field(default_factory=deque)
    pruned: List[int] = field(default_factory=lambda: [0] * len(OCTANTS))

    @classmethod
    def for_buffer(cls, fb: FrameBuffer) -> "TraversalState":
        return cls(visited=np.zeros((fb.blocks_y, fb.blocks_x), dtype=bool))

    def in_grid(self, bx: int, by: int) -> bool:
        return 0 <= bx < self.visited.shape[1] and 0 <= by < self.visited.shape[0]

    def push(self, bx: int, by: int) -> bool:
        if not self.in_grid(bx, by) or self.visited[by, bx]:
            return False
        self.visited[by, bx] = True
        self.queue.append((bx, by))
        return True

    def mark_ray(self, bx: int, by: int, direction: int) -> None:
        """Mark every block from (bx, by) outwards to the grid edge as visited"""
        dx, dy = OCTANTS[direction]
        x, y = bx + dx, by + dy
        while self.in_grid(x, y):
            self.visited[y, x] = True
            x, y = x + dx, y + dy
        self.pruned[direction] += 1


@dataclass
class BlockVisit:
    """One evaluated block: its in-support pixels and their alpha values"""
    bx: int
    by: int
    xs: np.ndarray
    ys: np.ndarray
    alpha: np.ndarray
    passing: np.ndarray


@dataclass
class BlockTraversal:
    visits: List[BlockVisit] = field(default_factory=list)
    masked_touched: int = 0
    support_tests: int = 0
    pruned_rays: int = 0

    @property
    def blocks(self) -> List[Tuple[int, int]]:
        return [(v.bx, v.by) for v in self.visits]

    @property
    def passing_blocks(self) -> List[Tuple[int, int]]:
        return [(v.bx, v.by) for v in self.visits if v.passing.any()]

    @property
    def alpha_evals(self) -> int:
        return sum(len(v.xs) for v in self.visits)


class _Support:
    """The region {q(p) <= level} clipped to the footprint area, tested per block"""

    def __init__(self, g: ProjectedGaussian, fp: PixelRect, level: float):
        self.mx, self.my = g.mean2d
        self.conic = _conic(g)
        self.level = level
        area = pixel_rect_area(fp)
        self.bounds: Optional[Rect] = None
        if level >= 0.0:
            ex0, ex1, ey0, ey1 = ellipse_bounds(self.mx, self.my, self.conic, level)
            x0, x1 = max(ex0, area[0]), min(ex1, area[1])
            y0, y1 = max(ey0, area[2]), min(ey1, area[3])
            if x0 <= x1 and y0 <= y1:
                self.bounds = (x0, x1, y0, y1)

    def touches(self, rect: PixelRect) -> bool:
        if self.bounds is None:
            return False
        area = pixel_rect_area(rect)
        x0, x1 = max(area[0], self.bounds[0]), min(area[1], self.bounds[1])
        y0, y1 = max(area[2], self.bounds[2]), min(area[3], self.bounds[3])
        if x0 > x1 or y0 > y1:
            return False
        qmin, _ = quadratic_min_on_rect(self.mx, self.my, self.conic, (x0, x1, y0, y1))
        return qmin <= self.level

    def pixels_in(self, rect: Optional[PixelRect]) -> Tuple[np.ndarray, np.ndarray]:
        """Pixels of rect whose centres lie inside the support ellipse, row-major"""
        if rect is None or self.level < 0.0:
            z = np.zeros(0, dtype=np.int64)
            return z, z
        rows = np.arange(rect[2], rect[3] + 1, dtype=np.int64)
        lo, hi = ellipse_row_spans(self.mx, self.my, self.conic, self.level, rows)
        lo = np.maximum(lo, rect[0])
        hi = np.minimum(hi, rect[1])
        counts = np.maximum(hi - lo + 1, 0)
        starts = np.cumsum(counts) - counts
        ys = np.repeat(rows, counts)
        xs = np.repeat(lo, counts) + np.arange(int(counts.sum()), dtype=np.int64) - np.repeat(starts, counts)
        return xs, ys


def _faces_passing(passing: np.ndarray, direction: int) -> bool:
    """Whether any outward-facing boundary pixel of a block passes"""
    dx, dy = OCTANTS[direction]
    edges = []
    if dy < 0:
        edges.append(passing[0, :])
    elif dy > 0:
        edges.append(passing[-1, :])
    if dx < 0:
        edges.append(passing[:, 0])
    elif dx > 0:
        edges.append(passing[:, -1])
    return any(bool(e.any()) for e in edges)


def traverse_blocks(
    g: ProjectedGaussian,
    fb: FrameBuffer,
    cfg: Optional[GccConfig] = None,
    lut: Optional[ExpLut] = None,
) -> BlockTraversal:
    """
    Breadth-first traversal of the block grid from the seed pixel's block

    An unmasked block evaluates alpha only on the in-footprint pixels whose
    centres fall inside the alpha_min support ellipse (per-row spans); every
    pixel outside it fails by construction and is never tested. A block is
    expanded to its 8 neighbours when it has a passing pixel or when the
    splat's alpha_min support reaches into it; masked blocks are never
    evaluated but still relay the search across occluded regions. With
    octant pruning, a direction whose facing boundary pixels all fail, and whose
    ray of blocks holds no support, is marked visited to the grid edge.
    """
    cfg = cfg or GccConfig()
    lut = _lut_for(cfg, lut)
    result = BlockTraversal()
    fp = clip_rect(footprint_rect(g.mean2d, g.radius), fb.scope)
    if fp is None:
        return result

    support = _Support(g, fp, support_level(g.log_opacity, cfg.alpha_min, cfg.exp_mode))
    state = TraversalState.for_buffer(fb)
    state.push(*fb.block_of(*seed_pixel(g, fp)))
    b = fb.block_size

    def touches(bx: int, by: int) -> bool:
        result.support_tests += 1
        return support.touches(fb.block_rect(bx, by))

    def ray_clear(bx: int, by: int, direction: int) -> bool:
        if support.bounds is None:
            return True
        dx, dy = OCTANTS[direction]
        lo_x = (math.floor(support.bounds[0]) - fb.origin_x) // b
        hi_x = (math.floor(support.bounds[1]) - fb.origin_x) // b
        lo_y = (math.floor(support.bounds[2]) - fb.origin_y) // b
        hi_y = (math.floor(support.bounds[3]) - fb.origin_y) // b
        x, y = bx + dx, by + dy
        while state.in_grid(x, y):
            if (dx > 0 and x > hi_x) or (dx < 0 and x < lo_x) or \
                    (dy > 0 and y > hi_y) or (dy < 0 and y < lo_y):
                return True
            if lo_x <= x <= hi_x and lo_y <= y <= hi_y and touches(x, y):
                return False
            x, y = x + dx, y + dy
        return True

    while state.queue:
        bx, by = state.queue.popleft()
        if fb.t_mask[by, bx]:
            result.masked_touched += 1
            if touches(bx, by):
                for dx, dy in OCTANTS:
                    state.push(bx + dx, by + dy)
            continue

        rect = fb.block_rect(bx, by)
        passing = np.zeros((rect[3] - rect[2] + 1, rect[1] - rect[0] + 1), dtype=bool)
        xs, ys = support.pixels_in(clip_rect(rect, fp))
        if len(xs):
            values = alpha_values(xs + 0.5, ys + 0.5, g.mean2d[0], g.mean2d[1], support.conic,
                                  g.log_opacity, cfg.exp_mode, lut)
            ok = values >= cfg.alpha_min
            passing[ys - rect[2], xs - rect[0]] = ok
            result.visits.append(BlockVisit(bx, by, xs, ys, values, ok))

        if not (passing.any() or touches(bx, by)):
            continue
        for direction, (dx, dy) in enumerate(OCTANTS):
            nx, ny = bx + dx, by + dy
            if not state.in_grid(nx, ny) or state.visited[ny, nx]:
                continue
            if cfg.octant_prune and not _faces_passing(passing, direction) and ray_clear(bx, by, direction):
                state.mark_ray(bx, by, direction)
                result.pruned_rays += 1
                continue
            state.push(nx, ny)
    return result
