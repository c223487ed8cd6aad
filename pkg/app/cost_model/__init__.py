"""
Splat Dataflow Lab - Memory traffic and time accounting
"""

from app.cost_model.ledger import (
    CATEGORY_SCALARS,
    SCALAR_BYTES,
    TrafficLedger,
    per_gaussian_load_stats,
    record,
    unused_preprocess_fraction,
)
from app.cost_model.roofline import (
    RooflineModel,
    estimate,
    is_monotone,
    plateau_bandwidth,
    sweep_bandwidth,
)

__all__ = [
    "CATEGORY_SCALARS",
    "SCALAR_BYTES",
    "RooflineModel",
    "TrafficLedger",
    "estimate",
    "is_monotone",
    "per_gaussian_load_stats",
    "plateau_bandwidth",
    "record",
    "sweep_bandwidth",
    "unused_preprocess_fraction",
]
