"""
Frame buffer with per-pixel transmittance and per-block termination mask
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

import numpy as np

from app.gs_math.raster import PixelRect
from app.models.schemas import OutputImage


@dataclass
class FrameBuffer:
    """
    Colour accumulator and transmittance for one render scope

    A scope is the whole image or one compatibility-mode sub-view; `origin_x`/`origin_y`
    place it in global pixel coordinates. Blocks are counted from the scope origin.
    `frame` is the whole image a sub-view belongs to; it defaults to the scope.
    """
    width: int
    height: int
    block_size: int = 8
    term_threshold: float = 1e-4
    early_termination: bool = True
    origin_x: int = 0
    origin_y: int = 0
    frame: Optional[PixelRect] = None
    color: np.ndarray = field(init=False, repr=False)
    transmittance: np.ndarray = field(init=False, repr=False)
    t_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.color = np.zeros((self.height, self.width, 3))
        self.transmittance = np.ones((self.height, self.width))
        self.t_mask = np.zeros((self.blocks_y, self.blocks_x), dtype=bool)

    @property
    def blocks_x(self) -> int:
        return -(-self.width // self.block_size)

    @property
    def blocks_y(self) -> int:
        return -(-self.height // self.block_size)

    @property
    def scope(self) -> PixelRect:
        """Inclusive global pixel rectangle covered by this buffer"""
        return (self.origin_x, self.origin_x + self.width - 1,
                self.origin_y, self.origin_y + self.height - 1)

    @property
    def frame_rect(self) -> PixelRect:
        return self.frame if self.frame is not None else self.scope

    def in_scope(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        x0, x1, y0, y1 = self.scope
        return (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)

    def block_rect(self, bx: int, by: int) -> PixelRect:
        """Inclusive global pixel rectangle of a block, clipped to the buffer"""
        x0 = self.origin_x + bx * self.block_size
        y0 = self.origin_y + by * self.block_size
        x1 = min(x0 + self.block_size, self.origin_x + self.width) - 1
        y1 = min(y0 + self.block_size, self.origin_y + self.height) - 1
        return x0, x1, y0, y1

    def block_of(self, x: int, y: int) -> Tuple[int, int]:
        """Block containing global pixel (x, y)"""
        return (x - self.origin_x) // self.block_size, (y - self.origin_y) // self.block_size

    def rect_pixels(self, rect: PixelRect) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened global (xs, ys) of an inclusive rectangle, row-major"""
        ys, xs = np.mgrid[rect[2]:rect[3] + 1, rect[0]:rect[1] + 1]
        return xs.ravel(), ys.ravel()

    def active(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Pixels still blending (T >= term_threshold)"""
        if not self.early_termination:
            return np.ones(len(xs), dtype=bool)
        return self.transmittance[ys - self.origin_y, xs - self.origin_x] >= self.term_threshold

    def rect_active(self, rect: PixelRect) -> bool:
        if not self.early_termination:
            return True
        t = self.transmittance[rect[2] - self.origin_y:rect[3] - self.origin_y + 1,
                               rect[0] - self.origin_x:rect[1] - self.origin_x + 1]
        return bool((t >= self.term_threshold).any())

    def blend(self, xs: np.ndarray, ys: np.ndarray, alpha: np.ndarray, rgb: np.ndarray) -> int:
        """
        Front-to-back blend of one Gaussian into distinct global pixels

        accum += T * alpha * rgb; T *= (1 - alpha)
        """
        if len(xs) == 0:
            return 0
        ly = ys - self.origin_y
        lx = xs - self.origin_x
        t = self.transmittance[ly, lx]
        weight = t * alpha
        self.color[ly, lx] = self.color[ly, lx] + weight[:, None] * np.asarray(rgb)[None, :]
        self.transmittance[ly, lx] = t * (1.0 - alpha)
        return int(len(xs))

    def refresh_mask(self, blocks: Iterable[Tuple[int, int]]) -> int:
        """Re-evaluate t_mask for the given blocks; returns how many became masked"""
        if not self.early_termination:
            return 0
        newly = 0
        for bx, by in blocks:
            if self.t_mask[by, bx]:
                continue
            x0, x1, y0, y1 = self.block_rect(bx, by)
            t = self.transmittance[y0 - self.origin_y:y1 - self.origin_y + 1,
                                   x0 - self.origin_x:x1 - self.origin_x + 1]
            if bool((t < self.term_threshold).all()):
                self.t_mask[by, bx] = True
                newly += 1
        return newly

    def blocks_of_pixels(self, xs: np.ndarray, ys: np.ndarray) -> Iterable[Tuple[int, int]]:
        if len(xs) == 0:
            return []
        bx = (xs - self.origin_x) // self.block_size
        by = (ys - self.origin_y) // self.block_size
        keys = np.unique(by * self.blocks_x + bx)
        return [(int(k % self.blocks_x), int(k // self.blocks_x)) for k in keys]

    def all_masked(self) -> bool:
        return bool(self.t_mask.all())

    def composite(self, background: Optional[Tuple[float, float, float]] = None) -> np.ndarray:
        """color + T * background, unclamped"""
        bg = np.asarray(background if background is not None else (0.0, 0.0, 0.0), dtype=np.float64)
        return self.color + self.transmittance[:, :, None] * bg[None, None, :]

    def finalize(self, background: Optional[Tuple[float, float, float]] = None) -> OutputImage:
        return OutputImage(rgb=self.composite(background))
