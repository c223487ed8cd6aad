"""
Per-pixel kernels: alpha, blending and footprint geometry
"""

import math
from typing import Optional, Tuple

import numpy as np

from app.gs_math.exp_lut import LUT_REL_ERROR_BOUND, ExpLut, get_exp_lut
from app.models.schemas import ExpMode

ALPHA_MAX = 0.99

# Pixel rectangle: inclusive integer bounds (x0, x1, y0, y1)
PixelRect = Tuple[int, int, int, int]
# Continuous rectangle in pixel-area coordinates (x0, x1, y0, y1)
Rect = Tuple[float, float, float, float]


# =============================================================================
# ALPHA
# =============================================================================

def alpha_values(
    px: np.ndarray,
    py: np.ndarray,
    mx: float,
    my: float,
    conic: Tuple[float, float, float],
    log_opacity: float,
    exp_mode: ExpMode = ExpMode.EXACT,
    lut: Optional[ExpLut] = None,
) -> np.ndarray:
    """
    alpha = min(0.99, exp(ln w - 0.5 d^T conic d)) at sample points (px, py)

    Both renderers evaluate alpha only through this function so that the same
    pixel and Gaussian always produce the same bits.
    """
    a, b, c = conic
    dx = np.ascontiguousarray(px, dtype=np.float64) - mx
    dy = np.ascontiguousarray(py, dtype=np.float64) - my
    power = log_opacity - 0.5 * (a * dx * dx + 2.0 * b * dx * dy + c * dy * dy)
    if exp_mode == ExpMode.LUT:
        value = (lut or get_exp_lut())(power)
    else:
        value = np.exp(power)
    return np.minimum(ALPHA_MAX, value)


def alpha(p: Tuple[float, float], g, exp_mode: ExpMode = ExpMode.EXACT, lut: Optional[ExpLut] = None) -> float:
    """Alpha of ProjectedGaussian g at sample point p (pixel centres are (x+0.5, y+0.5))"""
    inv = g.inv_cov
    return float(alpha_values(
        np.array([p[0]]), np.array([p[1]]), g.mean2d[0], g.mean2d[1],
        (inv.a, inv.b, inv.c), g.log_opacity, exp_mode, lut)[0])


def support_level(log_opacity: float, alpha_min: float, exp_mode: ExpMode) -> float:
    """
    Level c with alpha(p) >= alpha_min  =>  d^T conic d <= c

    In LUT mode the approximation may exceed e^x by the LUT error bound, which
    widens the level accordingly.
    """
    slack = math.log1p(LUT_REL_ERROR_BOUND) if exp_mode == ExpMode.LUT else 0.0
    level = 2.0 * (log_opacity - math.log(alpha_min) + slack)
    return level + 1e-9 * (1.0 + abs(level))


def blend_step(
    transmittance: float, alpha_value: float, color: np.ndarray, accum: np.ndarray
) -> Tuple[float, np.ndarray]:
    """accum + T*alpha*color, T*(1 - alpha)"""
    color = np.asarray(color, dtype=np.float64)
    accum = np.asarray(accum, dtype=np.float64)
    return transmittance * (1.0 - alpha_value), accum + (transmittance * alpha_value) * color


# =============================================================================
# FOOTPRINT GEOMETRY
# =============================================================================

def footprint_rects(mx: np.ndarray, my: np.ndarray, radius: np.ndarray) -> Tuple[np.ndarray, ...]:
    """
    Inclusive pixel rectangles [floor(x - r), floor(x + r)] x [floor(y - r), floor(y + r)]
    (unclipped) for arrays of centres and radii
    """
    r = np.asarray(radius, dtype=np.float64)
    x0 = np.floor(mx - r).astype(np.int64)
    x1 = np.floor(mx + r).astype(np.int64)
    y0 = np.floor(my - r).astype(np.int64)
    y1 = np.floor(my + r).astype(np.int64)
    return x0, x1, y0, y1


def footprint_rect(mean2d: Tuple[float, float], radius: int) -> PixelRect:
    x0, x1, y0, y1 = footprint_rects(np.array([mean2d[0]]), np.array([mean2d[1]]), np.array([radius]))
    return int(x0[0]), int(x1[0]), int(y0[0]), int(y1[0])


def clip_rect(rect: PixelRect, bounds: PixelRect) -> Optional[PixelRect]:
    """Intersection of two inclusive pixel rectangles, None when empty"""
    x0 = max(rect[0], bounds[0])
    x1 = min(rect[1], bounds[1])
    y0 = max(rect[2], bounds[2])
    y1 = min(rect[3], bounds[3])
    if x0 > x1 or y0 > y1:
        return None
    return x0, x1, y0, y1


def pixel_rect_area(rect: PixelRect) -> Rect:
    """Continuous area covered by the pixels of an inclusive rectangle"""
    return float(rect[0]), float(rect[1] + 1), float(rect[2]), float(rect[3] + 1)


def quadratic_min_on_rect(
    mx: float, my: float, conic: Tuple[float, float, float], rect: Rect
) -> Tuple[float, Tuple[float, float]]:
    """
    Minimum of q(p) = d^T conic d, d = p - (mx, my), over a closed rectangle

    Returns:
        (q_min, argmin point); the point is the centre itself when it lies inside
    """
    a, b, c = conic
    x0, x1, y0, y1 = rect
    if x0 <= mx <= x1 and y0 <= my <= y1:
        return 0.0, (mx, my)
    best = math.inf
    best_point = (mx, my)
    for x in (x0, x1):
        dx = x - mx
        dy = min(max(-b * dx / c, y0 - my), y1 - my)
        q = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
        if q < best:
            best, best_point = q, (x, my + dy)
    for y in (y0, y1):
        dy = y - my
        dx = min(max(-b * dy / a, x0 - mx), x1 - mx)
        q = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
        if q < best:
            best, best_point = q, (mx + dx, y)
    return best, best_point


def ellipse_bounds(mx: float, my: float, conic: Tuple[float, float, float], level: float) -> Rect:
    """Axis-aligned bounds of {p : q(p) <= level}"""
    a, b, c = conic
    if level <= 0.0:
        return mx, mx, my, my
    det = a * c - b * b
    half_x = math.sqrt(level * c / det)
    half_y = math.sqrt(level * a / det)
    return mx - half_x, mx + half_x, my - half_y, my + half_y


def ellipse_row_spans(
    mx: float, my: float, conic: Tuple[float, float, float], level: float, rows: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per pixel row, the inclusive column range whose pixel centres satisfy q(p) <= level

    Rows the ellipse misses get lo > hi.
    """
    a, b, c = conic
    dy = np.asarray(rows, dtype=np.float64) + 0.5 - my
    disc = a * level - (a * c - b * b) * dy * dy
    half = np.sqrt(np.maximum(disc, 0.0)) / a
    centre = mx - b * dy / a
    pad = 1e-9 * (1.0 + np.abs(centre) + half)
    lo = np.ceil(centre - half - pad - 0.5).astype(np.int64)
    hi = np.floor(centre + half + pad - 0.5).astype(np.int64)
    return lo, np.where(disc >= 0.0, hi, lo - 1)
