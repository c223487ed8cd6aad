"""
Splat Dataflow Lab - Quality and coverage metrics
"""

from app.metrics.coverage import coverage_report, coverage_table, totals_of
from app.metrics.quality import QualityCalculator, psnr, quality_report

__all__ = [
    "QualityCalculator",
    "coverage_report",
    "coverage_table",
    "psnr",
    "quality_report",
    "totals_of",
]
