"""
Gaussian model files in the common 3DGS point-cloud layout

Per vertex: x, y, z, (nx, ny, nz), f_dc_0..2, f_rest_0..44, opacity (logit),
scale_0..2 (log), rot_0..3 (w, x, y, z). f_rest is channel-major: 15 red
coefficients, then 15 green, then 15 blue.
"""

from pathlib import Path
from typing import List, Union

import numpy as np
import structlog
from plyfile import PlyData, PlyElement

from app.exceptions import ModelDataError, ModelFormatError, OutputWriteError
from app.models.gaussian_model import SH_COEFFS_PER_CHANNEL, GaussianModel

logger = structlog.get_logger(__name__)

REST_PER_CHANNEL = SH_COEFFS_PER_CHANNEL - 1
OPACITY_EPS = 1e-7


def _attribute_names(with_normals: bool = True) -> List[str]:
    names = ["x", "y", "z"]
    if with_normals:
        names += ["nx", "ny", "nz"]
    names += [f"f_dc_{i}" for i in range(3)]
    names += [f"f_rest_{i}" for i in range(3 * REST_PER_CHANNEL)]
    names.append("opacity")
    names += [f"scale_{i}" for i in range(3)]
    names += [f"rot_{i}" for i in range(4)]
    return names


REQUIRED_PROPERTIES = _attribute_names(with_normals=False)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def load_model(path: Union[str, Path]) -> GaussianModel:
    """
    Read a binary little-endian PLY and apply activations

    Opacity goes through the logistic sigmoid, scales through exp, and
    quaternions are normalised.

    Raises:
        ModelFormatError: unreadable file, wrong encoding or a missing property
        ModelDataError: a non-finite value (reports the first offending vertex)
    """
    path = Path(path)
    try:
        plydata = PlyData.read(str(path))
    except OSError as e:
        raise ModelFormatError(f"cannot read model {path}: {e}") from e
    except Exception as e:
        raise ModelFormatError(f"{path} is not a valid PLY file: {e}") from e

    if plydata.text or plydata.byte_order == ">":
        raise ModelFormatError(f"{path} is not binary_little_endian")
    if "vertex" not in [element.name for element in plydata.elements]:
        raise ModelFormatError(f"{path} has no vertex element", property_name="vertex")
    vertex = plydata["vertex"]
    available = {prop.name for prop in vertex.properties}
    for name in REQUIRED_PROPERTIES:
        if name not in available:
            raise ModelFormatError(f"{path} is missing vertex property '{name}'", property_name=name)

    def column(name: str) -> np.ndarray:
        return np.asarray(vertex[name], dtype=np.float64)

    raw = np.stack([column(name) for name in REQUIRED_PROPERTIES], axis=1)
    finite = np.isfinite(raw).all(axis=1)
    if not finite.all():
        index = int(np.argmin(finite))
        raise ModelDataError(f"{path}: vertex {index} has a non-finite value", vertex_index=index)

    n = raw.shape[0]
    positions = np.stack([column("x"), column("y"), column("z")], axis=1)
    dc = np.stack([column(f"f_dc_{i}") for i in range(3)], axis=1)
    rest = np.stack([column(f"f_rest_{i}") for i in range(3 * REST_PER_CHANNEL)], axis=1)
    sh = np.empty((n, 3, SH_COEFFS_PER_CHANNEL))
    sh[:, :, 0] = dc
    sh[:, :, 1:] = rest.reshape(n, 3, REST_PER_CHANNEL)
    # Saturated logits would leave the open interval (0, 1)
    opacities = np.clip(_sigmoid(column("opacity")), OPACITY_EPS, 1.0 - OPACITY_EPS)
    scales = np.exp(np.stack([column(f"scale_{i}") for i in range(3)], axis=1))
    rotations = np.stack([column(f"rot_{i}") for i in range(4)], axis=1)

    if np.any(np.linalg.norm(rotations, axis=1) == 0.0):
        index = int(np.argmax(np.linalg.norm(rotations, axis=1) == 0.0))
        raise ModelDataError(f"{path}: vertex {index} has a zero quaternion", vertex_index=index)

    model = GaussianModel.from_activated(
        positions=positions,
        sh=sh.reshape(n, 3 * SH_COEFFS_PER_CHANNEL),
        opacities=opacities,
        scales=scales,
        rotations=rotations,
        source_path=str(path),
    )
    logger.info("model_loaded", path=str(path), gaussians=model.count)
    return model


def save_model(model: GaussianModel, path: Union[str, Path]) -> None:
    """Write the model back in the same layout (inverse activations, float32)"""
    path = Path(path)
    n = model.count
    sh = model.sh.reshape(n, 3, SH_COEFFS_PER_CHANNEL)
    logits = np.log(model.opacities) - np.log1p(-model.opacities)
    attributes = np.concatenate([
        model.positions,
        np.zeros((n, 3)),
        sh[:, :, 0],
        sh[:, :, 1:].reshape(n, 3 * REST_PER_CHANNEL),
        logits[:, None],
        np.log(model.scales),
        model.rotations,
    ], axis=1)

    elements = np.empty(n, dtype=[(name, "f4") for name in _attribute_names()])
    for i, name in enumerate(_attribute_names()):
        elements[name] = attributes[:, i]

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        PlyData([PlyElement.describe(elements, "vertex")], byte_order="<").write(str(path))
    except OSError as e:
        raise OutputWriteError(str(path), e) from e
    logger.info("model_saved", path=str(path), gaussians=n)
