"""
Seeded synthetic scenes
"""

import math
from typing import Optional, Tuple

import numpy as np
import structlog

from app.exceptions import ConfigError
from app.gs_math.sh import C0
from app.models.gaussian_model import SH_COEFFS_PER_CHANNEL, GaussianModel
from app.models.schemas import Camera, SceneLayout, SceneSpec

logger = structlog.get_logger(__name__)


def _backproject(cam: Camera, u: np.ndarray, v: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Pixel coordinates and camera depth to world positions"""
    cam_points = np.stack([(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z], axis=1)
    return (cam_points - cam.translation[None, :]) @ cam.rotation


def _extended_frame(spec: SceneSpec) -> Tuple[float, float, float, float]:
    cam = spec.camera
    mx = spec.screen_margin * cam.width
    my = spec.screen_margin * cam.height
    return -mx, cam.width + mx, -my, cam.height + my


def _random_sh(rng: np.random.Generator, n: int, spec: SceneSpec) -> np.ndarray:
    """Base colour uniform in [0, 1] per channel, higher orders Gaussian noise"""
    sh = rng.normal(0.0, spec.sh_rest_std, size=(n, 3, SH_COEFFS_PER_CHANNEL))
    sh[:, :, 0] = (rng.uniform(0.0, 1.0, size=(n, 3)) - 0.5) / C0
    return sh.reshape(n, 3 * SH_COEFFS_PER_CHANNEL)


def _random_quaternions(rng: np.random.Generator, n: int) -> np.ndarray:
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def _frustum_gaussians(rng: np.random.Generator, n: int, spec: SceneSpec) -> dict:
    x0, x1, y0, y1 = _extended_frame(spec)
    u = rng.uniform(x0, x1, size=n)
    v = rng.uniform(y0, y1, size=n)
    z = rng.uniform(spec.depth_min, spec.depth_max, size=n)
    return {
        "positions": _backproject(spec.camera, u, v, z),
        "sh": _random_sh(rng, n, spec),
        "opacities": rng.uniform(spec.opacity_min, spec.opacity_max, size=n),
        "scales": np.exp(rng.uniform(math.log(spec.scale_min), math.log(spec.scale_max), size=(n, 3))),
        "rotations": _random_quaternions(rng, n),
    }


def _wall_gaussians(rng: np.random.Generator, n_wall: int, spec: SceneSpec) -> dict:
    """
    Staggered grid layers of isotropic, nearly opaque splats across the extended frame

    Each splat's screen-space sigma equals the grid spacing, so every layer
    alone leaves well under 1% transmittance.
    """
    cam = spec.camera
    x0, x1, y0, y1 = _extended_frame(spec)
    width, height = x1 - x0, y1 - y0
    layers = min(spec.wall_layers, n_wall)
    per_layer = max(1, n_wall // layers)
    cols = max(1, int(round(math.sqrt(per_layer * width / height))))
    rows = max(1, per_layer // cols)
    step_x, step_y = width / cols, height / rows
    sigma_px = max(step_x, step_y)

    us, vs, zs = [], [], []
    for layer in range(layers):
        shift = layer / layers
        gx, gy = np.meshgrid(np.arange(cols), np.arange(rows))
        us.append(x0 + (gx.ravel() + 0.5 + shift) * step_x)
        vs.append(y0 + (gy.ravel() + 0.5 + shift) * step_y)
        zs.append(np.full(cols * rows, spec.wall_depth * (1.0 + 0.01 * layer)))
    u, v, z = np.concatenate(us), np.concatenate(vs), np.concatenate(zs)
    count = len(u)
    scale = sigma_px * z / cam.fx
    return {
        "positions": _backproject(cam, u, v, z),
        "sh": _random_sh(rng, count, spec),
        "opacities": np.full(count, spec.wall_opacity),
        "scales": np.repeat(scale[:, None], 3, axis=1),
        "rotations": np.tile([1.0, 0.0, 0.0, 0.0], (count, 1)),
    }


def gen_scene(seed: int, n: int, spec: Optional[SceneSpec] = None) -> GaussianModel:
    """
    Generate n Gaussians deterministically from (seed, n, spec)

    frustum: positions uniform in screen space (plus margin) and depth range.
    occluder_wall: wall_fraction of n forms an opaque wall at wall_depth in
    front of a frustum scene holding the rest.

    Raises:
        ConfigError: n < 1
    """
    if n < 1:
        raise ConfigError(f"scene needs at least one Gaussian, got n={n}")
    spec = spec or SceneSpec()
    rng = np.random.default_rng(seed)

    if spec.layout == SceneLayout.OCCLUDER_WALL:
        n_wall = max(1, int(round(spec.wall_fraction * n)))
        wall = _wall_gaussians(rng, min(n_wall, n), spec)
        rest = n - len(wall["positions"])
        parts = [wall] + ([_frustum_gaussians(rng, rest, spec)] if rest > 0 else [])
        fields = {key: np.concatenate([part[key] for part in parts])[:n] for key in wall}
        order = rng.permutation(n)
        fields = {key: value[order] for key, value in fields.items()}
    else:
        fields = _frustum_gaussians(rng, n, spec)

    model = GaussianModel.from_activated(**fields)
    logger.info("scene_generated", seed=seed, gaussians=model.count, layout=spec.layout.value)
    return model
