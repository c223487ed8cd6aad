"""
Pydantic Schemas for Splat Dataflow Lab
These define scene records, render configurations and report payloads
"""

import math
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


# =============================================================================
# ENUMERATIONS
# =============================================================================

class RadiusLaw(str, Enum):
    """Footprint radius rule for a projected Gaussian"""
    THREE_SIGMA = "three_sigma"
    OMEGA_SIGMA = "omega_sigma"


class ExpMode(str, Enum):
    """How the alpha exponent is evaluated"""
    EXACT = "exact"
    LUT = "lut"


class BoundaryMode(str, Enum):
    """Effective-pixel search used by the Gaussian-wise renderer"""
    PIXEL_BFS = "pixel_bfs"
    BLOCK_OCTANT = "block_octant"


class PipelineKind(str, Enum):
    TILE = "tile"
    GCC = "gcc"


class SceneLayout(str, Enum):
    """Synthetic scene distributions"""
    FRUSTUM = "frustum"
    OCCLUDER_WALL = "occluder_wall"


# =============================================================================
# SCENE SCHEMAS
# =============================================================================

class Gaussian3D(BaseModel):
    """
    One trained splat with activations already applied
    """
    position: Tuple[float, float, float]
    sh: List[float] = Field(..., min_length=48, max_length=48,
                            description="16 coefficients per channel, channel-major")
    opacity: float = Field(..., gt=0, lt=1)
    log_opacity: float
    scale: Tuple[float, float, float]
    rotation: Tuple[float, float, float, float] = Field(
        ..., description="Unit quaternion (w, x, y, z)")

    @model_validator(mode="after")
    def check_invariants(self) -> "Gaussian3D":
        if any(s <= 0 for s in self.scale):
            raise ValueError("scale components must be strictly positive")
        norm = math.sqrt(sum(q * q for q in self.rotation))
        if abs(norm - 1.0) >= 1e-6:
            raise ValueError(f"quaternion norm {norm} is not 1")
        if abs(self.log_opacity - math.log(self.opacity)) > 1e-7:
            raise ValueError("log_opacity does not match ln(opacity)")
        return self


class Camera(BaseModel):
    """
    Pinhole camera with a rigid world-to-camera view transform
    """
    name: str = Field(default="cam0")
    width: int = Field(..., ge=1, description="Image width in pixels")
    height: int = Field(..., ge=1, description="Image height in pixels")
    fx: float = Field(..., gt=0)
    fy: float = Field(..., gt=0)
    cx: float
    cy: float
    view: List[List[float]] = Field(
        default_factory=lambda: np.eye(4).tolist(),
        description="4x4 world-to-camera matrix, row-major")
    znear: float = Field(default=0.01, gt=0)

    @field_validator("view")
    @classmethod
    def check_view(cls, value: List[List[float]]) -> List[List[float]]:
        matrix = np.asarray(value, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ValueError(f"view must be 4x4, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("view contains non-finite entries")
        rot = matrix[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-5, rtol=0.0):
            raise ValueError("rotation block of view is not orthonormal")
        if not np.allclose(matrix[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9, rtol=0.0):
            raise ValueError("last row of view must be (0, 0, 0, 1)")
        return matrix.tolist()

    @cached_property
    def view_matrix(self) -> np.ndarray:
        return np.asarray(self.view, dtype=np.float64)

    @cached_property
    def rotation(self) -> np.ndarray:
        """3x3 rotation block W"""
        return np.ascontiguousarray(self.view_matrix[:3, :3])

    @cached_property
    def translation(self) -> np.ndarray:
        return np.ascontiguousarray(self.view_matrix[:3, 3])

    @cached_property
    def center(self) -> np.ndarray:
        """Camera position in world space"""
        return -self.rotation.T @ self.translation

    class Config:
        json_schema_extra = {
            "example": {
                "name": "front",
                "width": 256,
                "height": 256,
                "fx": 300.0,
                "fy": 300.0,
                "cx": 128.0,
                "cy": 128.0,
                "view": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
                "znear": 0.01
            }
        }


class OutputImage(BaseModel):
    """Rendered RGB image, values clamped to [0, 1]"""
    rgb: np.ndarray

    @field_validator("rgb", mode="before")
    @classmethod
    def clamp_rgb(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 3 or array.shape[2] != 3:
            raise ValueError(f"rgb must have shape (H, W, 3), got {array.shape}")
        return np.clip(array, 0.0, 1.0)

    @property
    def width(self) -> int:
        return int(self.rgb.shape[1])

    @property
    def height(self) -> int:
        return int(self.rgb.shape[0])

    def to_uint8(self) -> np.ndarray:
        """Quantize with round-half-up of v*255"""
        return np.floor(self.rgb * 255.0 + 0.5).astype(np.uint8)

    def same_pixels(self, other: "OutputImage") -> bool:
        return self.rgb.shape == other.rgb.shape and bool(np.array_equal(self.rgb, other.rgb))

    class Config:
        arbitrary_types_allowed = True


def _default_scene_camera() -> Camera:
    return Camera(width=256, height=256, fx=300.0, fy=300.0, cx=128.0, cy=128.0)


class SceneSpec(BaseModel):
    """
    Distribution parameters for synthetic scenes
    """
    camera: Camera = Field(default_factory=_default_scene_camera)
    layout: SceneLayout = SceneLayout.FRUSTUM
    depth_min: float = Field(default=2.0, gt=0)
    depth_max: float = Field(default=10.0, gt=0)
    opacity_min: float = Field(default=0.01, gt=0, lt=1)
    opacity_max: float = Field(default=1.0, gt=0, le=1)
    scale_min: float = Field(default=0.005, gt=0)
    scale_max: float = Field(default=0.05, gt=0)
    sh_rest_std: float = Field(default=0.1, ge=0)
    screen_margin: float = Field(default=0.1, ge=0,
                                 description="Fraction of the frame added around the frustum")

    # Occluder wall layout
    wall_fraction: float = Field(default=0.1, gt=0, lt=1)
    wall_depth: float = Field(default=1.0, gt=0)
    wall_layers: int = Field(default=3, ge=1)
    wall_opacity: float = Field(default=0.98, gt=0, lt=1)

    @model_validator(mode="after")
    def check_ranges(self) -> "SceneSpec":
        if self.depth_min > self.depth_max:
            raise ValueError("depth_min must not exceed depth_max")
        if self.opacity_min > self.opacity_max:
            raise ValueError("opacity_min must not exceed opacity_max")
        if self.scale_min > self.scale_max:
            raise ValueError("scale_min must not exceed scale_max")
        if self.depth_min <= self.camera.znear:
            raise ValueError("depth_min must lie beyond the camera near plane")
        if self.layout == SceneLayout.OCCLUDER_WALL and self.wall_depth >= self.depth_min:
            raise ValueError("wall_depth must be nearer than depth_min")
        return self


# =============================================================================
# RENDER CONFIGURATION SCHEMAS
# =============================================================================

class RenderConfig(BaseModel):
    """
    Tile-wise (baseline) renderer configuration
    """
    tile_size: int = Field(default=16, ge=1, description="Tile edge in pixels")
    radius_law: RadiusLaw = RadiusLaw.THREE_SIGMA
    exp_mode: ExpMode = ExpMode.EXACT
    alpha_min: float = Field(default=1.0 / 255.0, gt=0, lt=1)
    term_threshold: float = Field(default=1e-4, gt=0, lt=1)
    dilation: float = Field(default=0.3, ge=0)
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    early_termination: bool = True


class GccConfig(BaseModel):
    """
    Gaussian-wise cross-stage conditional renderer configuration
    """
    group_cap: int = Field(default=256, ge=1, description="Max Gaussians per depth group")
    depth_threshold: float = Field(default=0.2, ge=0)
    initial_bins: int = Field(default=1024, ge=1)
    block_size: int = Field(default=8, ge=1)
    boundary_mode: BoundaryMode = BoundaryMode.BLOCK_OCTANT
    octant_prune: bool = True
    radius_law: RadiusLaw = RadiusLaw.OMEGA_SIGMA
    exp_mode: ExpMode = ExpMode.EXACT
    alpha_min: float = Field(default=1.0 / 255.0, gt=0, lt=1)
    term_threshold: float = Field(default=1e-4, gt=0, lt=1)
    dilation: float = Field(default=0.3, ge=0)
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    early_termination: bool = True
    cmode: Optional[int] = Field(default=None, ge=1,
                                 description="Sub-view size; None disables compatibility mode")

    @model_validator(mode="after")
    def check_subview(self) -> "GccConfig":
        if self.cmode is not None and self.cmode < self.block_size:
            raise ValueError("cmode sub-view size must be at least block_size")
        return self

    def matched_to(self, render_cfg: RenderConfig) -> "GccConfig":
        """Copy with every shared field taken from a tile configuration"""
        return self.model_copy(update={
            "radius_law": render_cfg.radius_law,
            "exp_mode": render_cfg.exp_mode,
            "alpha_min": render_cfg.alpha_min,
            "term_threshold": render_cfg.term_threshold,
            "dilation": render_cfg.dilation,
            "background": render_cfg.background,
            "early_termination": render_cfg.early_termination,
        })


# =============================================================================
# REPORT SCHEMAS
# =============================================================================

class QualityReport(BaseModel):
    """PSNR comparison of two images; psnr is inf on exact match"""
    psnr: float
    max_abs_err: float = Field(..., ge=0)
    pixel_count: int = Field(..., ge=0)
    exact_match: bool


class CostEstimate(BaseModel):
    """Roofline-style time estimate for one ledger at one bandwidth"""
    bytes_total: int = Field(..., ge=0)
    ops_total: int = Field(..., ge=0)
    compute_rate: float = Field(..., gt=0, description="ops/s")
    bandwidth: float = Field(..., gt=0, description="bytes/s")
    compute_time: float
    memory_time: float
    est_time: float
    bound: str = Field(..., description="compute or memory")


class LoadStats(BaseModel):
    """Per-Gaussian attribute load statistics"""
    gaussians: int = Field(..., ge=0)
    mean: float = Field(..., ge=0)
    max: int = Field(..., ge=0)
    histogram: Dict[int, int] = Field(default_factory=dict,
                                      description="load count -> number of Gaussians")


class PreprocessSavings(BaseModel):
    """Share of baseline preprocessing the Gaussian-wise dataflow never does"""
    fraction: float
    base_sh_evals: int
    gcc_sh_evals: int
    sh_bytes_base: int
    sh_bytes_gcc: int
    sh_bytes_saved: int


class CoverageTotals(BaseModel):
    """Rendered-pixel totals for the three footprint models"""
    gaussians: int = Field(default=0, ge=0)
    aabb_px: int = Field(default=0, ge=0)
    obb_px: int = Field(default=0, ge=0)
    alpha_px: int = Field(default=0, ge=0)

    def __add__(self, other: "CoverageTotals") -> "CoverageTotals":
        return CoverageTotals(
            gaussians=self.gaussians + other.gaussians,
            aabb_px=self.aabb_px + other.aabb_px,
            obb_px=self.obb_px + other.obb_px,
            alpha_px=self.alpha_px + other.alpha_px,
        )


class FrameStats(BaseModel):
    """Per-frame pipeline bookkeeping"""
    pipeline: PipelineKind
    gaussians_in: int = 0
    culled_near: int = 0
    culled_singular: int = 0
    culled_radius: int = 0
    culled_offscreen: int = 0
    rendered: int = 0
    groups_total: int = 0
    groups_processed: int = 0
    groups_skipped: int = 0
    tiles_visited: int = 0
    subviews: int = 0

    def absorb(self, other: "FrameStats") -> None:
        """Add another scope's counters (compatibility-mode sub-views)"""
        for name in ("culled_near", "culled_singular", "culled_radius", "culled_offscreen",
                     "rendered", "groups_total", "groups_processed", "groups_skipped",
                     "tiles_visited"):
            setattr(self, name, getattr(self, name) + getattr(other, name))


class InputFile(BaseModel):
    path: str
    sha256: str


class RunManifest(BaseModel):
    """
    One JSON report per CLI run
    """
    schema_version: int
    app_version: str
    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    inputs: Dict[str, InputFile] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    ledger: Optional[Dict[str, Any]] = None
    quality: Optional[Dict[str, Any]] = None
    stats: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    wall_time_s: float = 0.0
