"""
Image files: binary PPM (P6, maxval 255) or PNG, chosen by extension
"""

from pathlib import Path
from typing import Union

import numpy as np
import structlog
from PIL import Image

from app.exceptions import ImageFormatError, ImageShapeError, OutputWriteError
from app.models.schemas import OutputImage

logger = structlog.get_logger(__name__)

IMAGE_FORMATS = {".ppm": "PPM", ".png": "PNG"}


def image_format(path: Union[str, Path]) -> str:
    """
    Pillow format name for an output path

    Raises:
        ImageFormatError: the extension is not .ppm or .png
    """
    suffix = Path(path).suffix.lower()
    if suffix not in IMAGE_FORMATS:
        raise ImageFormatError(f"{path}: unsupported image extension {suffix or '(none)'!r}, use .ppm or .png")
    return IMAGE_FORMATS[suffix]


def write_image(img: OutputImage, path: Union[str, Path]) -> None:
    """
    Quantize (round-half-up of v*255 after clamping) and write

    Raises:
        ImageFormatError: the extension is not .ppm or .png
        OutputWriteError: the file could not be written
    """
    path = Path(path)
    fmt = image_format(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(img.to_uint8()).save(path, format=fmt)
    except OSError as e:
        raise OutputWriteError(str(path), e) from e
    logger.debug("image_written", path=str(path), width=img.width, height=img.height)


def read_image(path: Union[str, Path]) -> OutputImage:
    """Load a PPM/PNG back into unit range"""
    with Image.open(Path(path)) as handle:
        pixels = np.asarray(handle.convert("RGB"), dtype=np.float64)
    if pixels.ndim != 3:
        raise ImageShapeError(f"{path} is not an RGB image")
    return OutputImage(rgb=pixels / 255.0)
