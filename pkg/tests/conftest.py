"""
Shared fixtures: cameras, small seeded scenes and hand-built splats
"""

import math
from typing import Sequence, Tuple

import numpy as np
import pytest

from app.gs_math.projection import ProjectedGaussian
from app.gs_math.sh import C0
from app.gs_math.transforms import SymMat2
from app.models.gaussian_model import SH_COEFFS, SH_COEFFS_PER_CHANNEL, GaussianModel
from app.models.schemas import Camera, GccConfig, RadiusLaw, RenderConfig, SceneLayout, SceneSpec
from app.scene_io.synthetic import gen_scene


def make_camera(width: int = 64, height: int = 64, focal: float = 80.0, view=None) -> Camera:
    fields = dict(width=width, height=height, fx=focal, fy=focal, cx=width / 2.0, cy=height / 2.0)
    if view is not None:
        fields["view"] = view
    return Camera(**fields)


def make_model(
    positions: Sequence[Sequence[float]],
    scales: Sequence[Sequence[float]],
    opacities: Sequence[float],
    colors: Sequence[Sequence[float]] = None,
) -> GaussianModel:
    """Model with view-independent colours (dc term only)"""
    n = len(positions)
    colors = np.full((n, 3), 0.5) if colors is None else np.asarray(colors, dtype=np.float64)
    sh = np.zeros((n, 3, SH_COEFFS_PER_CHANNEL))
    sh[:, :, 0] = (colors - 0.5) / C0
    return GaussianModel.from_activated(
        positions=np.asarray(positions, dtype=np.float64),
        sh=sh.reshape(n, SH_COEFFS),
        opacities=np.asarray(opacities, dtype=np.float64),
        scales=np.asarray(scales, dtype=np.float64),
        rotations=np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)),
    )


def make_splat(
    center: Tuple[float, float],
    cov: Tuple[float, float, float] = (4.0, 0.0, 4.0),
    opacity: float = 1.0,
    radius: int = None,
    color: Tuple[float, float, float] = (1.0, 0.5, 0.25),
    depth: float = 1.0,
    src: int = 0,
) -> ProjectedGaussian:
    """Screen-space splat from its 2D covariance; radius defaults to the opacity-aware law"""
    a, b, c = cov
    det = a * c - b * b
    lambda1 = 0.5 * (a + c) + math.sqrt(0.25 * (a - c) ** 2 + b * b)
    if radius is None:
        log_term = math.log(255.0 * opacity) if 255.0 * opacity > 1.0 else 0.0
        radius = int(math.ceil(math.sqrt(2.0 * log_term * lambda1)))
    return ProjectedGaussian(
        mean2d=(float(center[0]), float(center[1])),
        depth=depth,
        inv_cov=SymMat2(c / det, -b / det, a / det),
        radius=radius,
        color=color,
        log_opacity=math.log(opacity),
        src=src,
    )


def random_splat(rng: np.random.Generator, width: int, height: int, src: int = 0) -> ProjectedGaussian:
    """Anisotropic splat with a centre near (possibly outside) the frame"""
    sx, sy = np.exp(rng.uniform(np.log(0.6), np.log(6.0), size=2))
    theta = rng.uniform(0.0, math.pi)
    cos, sin = math.cos(theta), math.sin(theta)
    a = cos * cos * sx * sx + sin * sin * sy * sy
    b = cos * sin * (sx * sx - sy * sy)
    c = sin * sin * sx * sx + cos * cos * sy * sy
    center = (rng.uniform(-8.0, width + 8.0), rng.uniform(-8.0, height + 8.0))
    return make_splat(center, (a, b, c), opacity=float(rng.uniform(0.01, 1.0)), src=src)


def matched_configs() -> Tuple[RenderConfig, GccConfig]:
    render_cfg = RenderConfig()
    return render_cfg, GccConfig(radius_law=RadiusLaw.THREE_SIGMA).matched_to(render_cfg)


@pytest.fixture
def camera() -> Camera:
    return make_camera()


@pytest.fixture
def scene_spec(camera) -> SceneSpec:
    return SceneSpec(camera=camera, scale_min=0.02, scale_max=0.12)


@pytest.fixture
def small_scene(scene_spec) -> GaussianModel:
    return gen_scene(7, 300, scene_spec)


@pytest.fixture
def wall_spec(camera) -> SceneSpec:
    return SceneSpec(camera=camera, layout=SceneLayout.OCCLUDER_WALL, wall_fraction=0.1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
