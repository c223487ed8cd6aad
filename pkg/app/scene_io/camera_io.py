"""
Camera files

JSON document:
    {"schema_version": 1,
     "cameras": [{"name", "width", "height", "fx", "fy", "cx", "cy", "znear", "view": 4x4}]}
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import structlog
from pydantic import ValidationError

from app.exceptions import CameraValidationError, OutputWriteError
from app.models.schemas import Camera

logger = structlog.get_logger(__name__)

CAMERA_SCHEMA_VERSION = 1


def parse_cameras(document: Any) -> List[Camera]:
    """Validate a decoded camera document; cameras keep file order"""
    if isinstance(document, dict):
        version = document.get("schema_version", CAMERA_SCHEMA_VERSION)
        if version != CAMERA_SCHEMA_VERSION:
            raise CameraValidationError(f"unsupported camera schema_version {version}")
        entries = document.get("cameras")
    else:
        entries = document
    if not isinstance(entries, list) or not entries:
        raise CameraValidationError("camera file must list at least one camera")

    cameras = []
    for i, entry in enumerate(entries):
        try:
            cameras.append(Camera.model_validate(entry))
        except ValidationError as e:
            problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'camera'}: {err['msg']}"
                                 for err in e.errors())
            raise CameraValidationError(f"camera {i}: {problems}") from e
    return cameras


def load_camera(path: Union[str, Path]) -> List[Camera]:
    """
    Read every camera of a camera file

    Raises:
        CameraValidationError: unreadable JSON, schema violations or invalid intrinsics/view
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as e:
        raise CameraValidationError(f"cannot read camera file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CameraValidationError(f"{path} is not valid JSON: {e}") from e
    cameras = parse_cameras(document)
    logger.info("cameras_loaded", path=str(path), cameras=len(cameras))
    return cameras


def cameras_document(cameras: Sequence[Camera]) -> Dict[str, Any]:
    return {
        "schema_version": CAMERA_SCHEMA_VERSION,
        "cameras": [camera.model_dump() for camera in cameras],
    }


def save_cameras(cameras: Sequence[Camera], path: Union[str, Path]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(cameras_document(cameras), indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise OutputWriteError(str(path), e) from e
