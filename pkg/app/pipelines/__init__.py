"""
Splat Dataflow Lab - Renderers
"""

from app.pipelines.base import BasePipeline, RenderResult
from app.pipelines.boundary import (
    BlockTraversal,
    TraversalState,
    identify_boundary_pixels,
    pixel_component,
    traverse_blocks,
)
from app.pipelines.cmode import render_cmode, subview_rects
from app.pipelines.framebuffer import FrameBuffer
from app.pipelines.gcc import (
    DepthGroup,
    GccPipeline,
    render_gcc,
    stage1_group,
    stage2_project,
    stage3_color_sort,
    stage4_blend,
)
from app.pipelines.tile import (
    TileBinning,
    TilePipeline,
    bin_to_tiles,
    coverage_counts,
    preprocess_all,
    render_frame,
    render_tiles,
)

__all__ = [
    "BasePipeline",
    "BlockTraversal",
    "DepthGroup",
    "FrameBuffer",
    "GccPipeline",
    "RenderResult",
    "TileBinning",
    "TilePipeline",
    "TraversalState",
    "bin_to_tiles",
    "coverage_counts",
    "identify_boundary_pixels",
    "pixel_component",
    "preprocess_all",
    "render_cmode",
    "render_frame",
    "render_gcc",
    "render_tiles",
    "stage1_group",
    "stage2_project",
    "stage3_color_sort",
    "stage4_blend",
    "subview_rects",
    "traverse_blocks",
]
