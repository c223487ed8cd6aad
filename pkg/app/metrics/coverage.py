"""
Rendered-pixel coverage totals (AABB vs OBB vs alpha-effective)
"""

from typing import Optional, Union

import numpy as np
import pandas as pd

from app.gs_math.projection import project_gaussians
from app.models.gaussian_model import GaussianModel
from app.models.schemas import Camera, CoverageTotals, GccConfig, RenderConfig
from app.pipelines.tile import COVERAGE_COLUMNS, coverage_counts

AnyConfig = Union[RenderConfig, GccConfig]


def coverage_table(model: GaussianModel, cam: Camera, cfg: Optional[AnyConfig] = None) -> pd.DataFrame:
    """Per-Gaussian counts for every splat surviving projection and culling under cfg"""
    cfg = cfg or RenderConfig()
    if model.count == 0:
        return pd.DataFrame(columns=COVERAGE_COLUMNS)
    survivors = project_gaussians(model, np.arange(model.count), cam, cfg.dilation, cfg.radius_law).batch
    return coverage_counts(survivors, cam)


def totals_of(table: pd.DataFrame) -> CoverageTotals:
    return CoverageTotals(
        gaussians=int(len(table)),
        aabb_px=int(table["aabb_px"].sum()) if len(table) else 0,
        obb_px=int(table["obb_px"].sum()) if len(table) else 0,
        alpha_px=int(table["alpha_px"].sum()) if len(table) else 0,
    )


def coverage_report(model: GaussianModel, cam: Camera, cfg: Optional[AnyConfig] = None) -> CoverageTotals:
    return totals_of(coverage_table(model, cam, cfg))
