"""
Piecewise-linear EXP lookup table over [-5.54, 0)
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LUT_SEGMENTS = 16
LUT_LOWER = -5.54
LUT_UPPER = 0.0
# Documented bound; build_exp_lut checks the construction stays below it.
LUT_REL_ERROR_BOUND = 0.01


@dataclass(frozen=True)
class ExpLut:
    """
    16 uniform linear segments approximating e^x

    lut(x) = slope[i] * x + intercept[i] inside segment i, 0 for x <= lower, 1 for x >= 0.
    """
    slopes: np.ndarray
    intercepts: np.ndarray
    lower: float = LUT_LOWER
    upper: float = LUT_UPPER
    max_rel_error: float = 0.0

    @property
    def segments(self) -> int:
        return int(self.slopes.shape[0])

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.segments

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        index = np.floor((x - self.lower) / self.width).astype(np.int64)
        index = np.clip(index, 0, self.segments - 1)
        value = self.slopes[index] * x + self.intercepts[index]
        value = np.where(x <= self.lower, 0.0, value)
        return np.where(x >= self.upper, 1.0, value)


def _chord_peak_error(width: float) -> float:
    """Peak relative error of the endpoint chord of e^x over a segment of this width"""
    k = math.expm1(width) / width
    t_star = 1.0 - 1.0 / k
    return k * math.exp(-t_star) - 1.0


def build_exp_lut(segments: int = LUT_SEGMENTS) -> ExpLut:
    """
    Build the LUT

    Each segment is the chord through e^x at its endpoints, scaled by 1/(1 + E/2)
    where E is the chord's peak relative error; this centres the error band so
    |lut(x) - e^x| / e^x <= E / (2 + E) on every segment.
    """
    width = (LUT_UPPER - LUT_LOWER) / segments
    peak = _chord_peak_error(width)
    scale = 1.0 / (1.0 + 0.5 * peak)
    x0 = LUT_LOWER + width * np.arange(segments)
    x1 = x0 + width
    y0 = np.exp(x0)
    y1 = np.exp(x1)
    slopes = (y1 - y0) / width * scale
    intercepts = (y0 - slopes / scale * x0) * scale
    max_rel = peak / (2.0 + peak)
    if max_rel >= LUT_REL_ERROR_BOUND:
        raise ValueError(f"{segments} segments cannot meet the LUT error bound")
    return ExpLut(slopes=slopes, intercepts=intercepts, max_rel_error=max_rel)


@lru_cache()
def get_exp_lut() -> ExpLut:
    """Shared immutable LUT instance"""
    return build_exp_lut()
