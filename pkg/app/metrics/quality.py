"""
Image Quality Calculator
PSNR (peak 1.0) between two rendered images
"""

import math

import numpy as np

from app.exceptions import ImageShapeError
from app.models.schemas import OutputImage, QualityReport

PEAK = 1.0


class QualityCalculator:
    """
    Compares unquantized images in unit range
    """

    def __init__(self, peak: float = PEAK):
        self.peak = peak

    def _check(self, a: OutputImage, b: OutputImage) -> None:
        if a.rgb.shape != b.rgb.shape:
            raise ImageShapeError(
                f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")

    def psnr(self, a: OutputImage, b: OutputImage) -> float:
        """
        10 * log10(peak^2 / MSE) over all channels

        Returns:
            PSNR in dB; math.inf for identical images
        """
        self._check(a, b)
        diff = a.rgb - b.rgb
        mse = float(np.mean(diff * diff))
        if mse == 0.0:
            return math.inf
        return 10.0 * math.log10(self.peak * self.peak / mse)

    def report(self, a: OutputImage, b: OutputImage) -> QualityReport:
        value = self.psnr(a, b)
        return QualityReport(
            psnr=value,
            max_abs_err=float(np.max(np.abs(a.rgb - b.rgb))) if a.rgb.size else 0.0,
            pixel_count=a.width * a.height,
            exact_match=math.isinf(value),
        )


def psnr(a: OutputImage, b: OutputImage) -> float:
    return QualityCalculator().psnr(a, b)


def quality_report(a: OutputImage, b: OutputImage) -> QualityReport:
    return QualityCalculator().report(a, b)
