"""
Run manifests: one JSON report per CLI run
"""

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import structlog

from app.config import get_settings
from app.exceptions import OutputWriteError
from app.models.schemas import InputFile, RunManifest

logger = structlog.get_logger(__name__)

HASH_CHUNK = 1 << 20


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(HASH_CHUNK), b""):
            digest.update(chunk)
    return digest.hexdigest()


def input_file(path: Union[str, Path]) -> InputFile:
    return InputFile(path=str(path), sha256=file_sha256(path))


def new_manifest(command: str, **fields: Any) -> RunManifest:
    settings = get_settings()
    return RunManifest(
        schema_version=settings.report_schema_version,
        app_version=settings.app_version,
        command=command,
        **fields,
    )


def json_ready(value: Any) -> Any:
    """Replace non-finite floats (exact-match PSNR, unbounded plateaus) with None"""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    return value


def manifest_text(manifest: RunManifest) -> str:
    payload = json_ready(manifest.model_dump(mode="python"))
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> Path:
    """
    Write the manifest with sorted keys

    Raises:
        OutputWriteError: the report could not be written
    """
    path = Path(path)
    text = manifest_text(manifest)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputWriteError(str(path), e) from e
    logger.info("report_written", path=str(path), command=manifest.command)
    return path
