"""
Traffic Ledger
Counts off-chip bytes by data category and stage, arithmetic operations, and
per-Gaussian attribute loads
"""

import threading
from collections import defaultdict
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np

from app.exceptions import UndefinedMetricError, UnknownCategoryError
from app.models.schemas import LoadStats, PreprocessSavings

SCALAR_BYTES = 4

# Scalars per record, by traffic category
CATEGORY_SCALARS = {
    "gauss3d_attr": 59,     # position 3, SH 48, opacity 1, scale 3, rotation 4
    "gauss_position": 3,
    "sh_coeff": 48,
    "gauss_shape": 8,       # opacity 1, scale 3, rotation 4 (spatial binning)
    "ellipse2d": 8,         # mean 2, conic 3, depth 1, radius 1, opacity 1
    "kv_pair": 2,           # tile id, gaussian ref
    "depth_id": 2,          # depth, gaussian id
    "subview_bind": 2,      # sub-view id, gaussian ref
    "image_rw": 3,          # RGB per pixel
}

# Already contained in gauss3d_attr traffic; reported, not added to bytes_total
NESTED_CATEGORIES = frozenset({"sh_coeff"})

# Categories whose records count as a per-Gaussian attribute load
LOAD_TRACKED = frozenset({"gauss3d_attr", "ellipse2d"})

OP_COUNTERS = (
    "depth_evals",
    "projections",
    "sh_evals",
    "sort_keys",
    "alpha_evals",
    "boundary_evals",
    "blend_steps",
)

GaussianIds = Union[int, Iterable[int], np.ndarray]


class TrafficLedger:
    """
    Byte and operation counters for one frame

    Counters only grow. All mutation goes through a lock, so workers may share
    a ledger; they may also keep private ledgers and merge() them afterwards.
    """

    def __init__(self, name: str = "frame"):
        self.name = name
        self.bytes_by_stage: Dict[str, Dict[str, int]] = defaultdict(lambda: defaultdict(int))
        self.ops: Dict[str, int] = {op: 0 for op in OP_COUNTERS}
        self.load_counts: Dict[int, int] = defaultdict(int)
        self._lock = threading.Lock()

    # -------------------------------------------------------------------------
    # Recording
    # -------------------------------------------------------------------------

    def record(
        self,
        category: str,
        scalars: Optional[int] = None,
        gaussians: Optional[GaussianIds] = None,
        count: int = 1,
        stage: str = "frame",
    ) -> int:
        """
        Record `count` records (or one per id in `gaussians`) of a category

        Args:
            category: traffic category (see CATEGORY_SCALARS)
            scalars: scalars per record, defaults to the category layout
            gaussians: source ids the records belong to; tracked for LOAD_TRACKED categories
            count: number of records when no ids are given
            stage: pipeline stage the traffic belongs to

        Returns:
            Bytes added
        """
        if category not in CATEGORY_SCALARS:
            raise UnknownCategoryError(category)
        per_record = CATEGORY_SCALARS[category] if scalars is None else int(scalars)
        ids = None
        if gaussians is not None:
            ids = np.atleast_1d(np.asarray(gaussians, dtype=np.int64))
            count = int(ids.shape[0])
        added = per_record * SCALAR_BYTES * int(count)
        with self._lock:
            self.bytes_by_stage[stage][category] += added
            if ids is not None and category in LOAD_TRACKED and len(ids):
                unique, counts = np.unique(ids, return_counts=True)
                for gid, n in zip(unique.tolist(), counts.tolist()):
                    self.load_counts[gid] += n
        return added

    def count(self, op: str, n: int = 1) -> None:
        if op not in self.ops:
            raise UnknownCategoryError(op)
        with self._lock:
            self.ops[op] += int(n)

    def merge(self, other: "TrafficLedger") -> "TrafficLedger":
        """Add another ledger's counters into this one"""
        with self._lock:
            for stage, categories in other.bytes_by_stage.items():
                for category, value in categories.items():
                    self.bytes_by_stage[stage][category] += value
            for op, value in other.ops.items():
                self.ops[op] += value
            for gid, value in other.load_counts.items():
                self.load_counts[gid] += value
        return self

    # -------------------------------------------------------------------------
    # Totals
    # -------------------------------------------------------------------------

    @property
    def bytes_by_category(self) -> Dict[str, int]:
        totals = {category: 0 for category in CATEGORY_SCALARS}
        for categories in self.bytes_by_stage.values():
            for category, value in categories.items():
                totals[category] += value
        return totals

    def category_bytes(self, category: str) -> int:
        if category not in CATEGORY_SCALARS:
            raise UnknownCategoryError(category)
        return self.bytes_by_category[category]

    @property
    def bytes_total(self) -> int:
        return sum(v for k, v in self.bytes_by_category.items() if k not in NESTED_CATEGORIES)

    @property
    def ops_total(self) -> int:
        return sum(self.ops.values())

    def to_report(self) -> Dict[str, Any]:
        """JSON-ready summary"""
        stats = per_gaussian_load_stats(self)
        return {
            "name": self.name,
            "layout": {
                "scalar_bytes": SCALAR_BYTES,
                "record_scalars": dict(CATEGORY_SCALARS),
                "nested": sorted(NESTED_CATEGORIES),
            },
            "bytes": self.bytes_by_category,
            "bytes_by_stage": {stage: dict(cats) for stage, cats in sorted(self.bytes_by_stage.items())},
            "bytes_total": self.bytes_total,
            "ops": dict(self.ops),
            "ops_total": self.ops_total,
            "loads": {
                "gaussians": stats.gaussians,
                "mean": stats.mean,
                "max": stats.max,
                "histogram": {str(k): v for k, v in sorted(stats.histogram.items())},
            },
        }


def record(ledger: TrafficLedger, category: str, scalars: Optional[int] = None, **kwargs) -> int:
    """Module-level form of TrafficLedger.record"""
    return ledger.record(category, scalars, **kwargs)


# =============================================================================
# REDUNDANCY METRICS
# =============================================================================

def per_gaussian_load_stats(ledger: TrafficLedger) -> LoadStats:
    """Mean, max and histogram of per-Gaussian attribute loads"""
    counts = list(ledger.load_counts.values())
    if not counts:
        return LoadStats(gaussians=0, mean=0.0, max=0, histogram={})
    histogram: Dict[int, int] = defaultdict(int)
    for value in counts:
        histogram[value] += 1
    return LoadStats(
        gaussians=len(counts),
        mean=float(sum(counts)) / len(counts),
        max=max(counts),
        histogram=dict(sorted(histogram.items())),
    )


def unused_preprocess_fraction(base: TrafficLedger, gcc: TrafficLedger) -> PreprocessSavings:
    """
    1 - gcc_sh_evals / base_sh_evals, plus SH byte savings

    Raises:
        UndefinedMetricError: the baseline evaluated no colours
    """
    base_evals = base.ops["sh_evals"]
    gcc_evals = gcc.ops["sh_evals"]
    if base_evals == 0:
        raise UndefinedMetricError("baseline ledger has no SH evaluations")
    base_bytes = base.category_bytes("sh_coeff")
    gcc_bytes = gcc.category_bytes("sh_coeff")
    return PreprocessSavings(
        fraction=1.0 - gcc_evals / base_evals,
        base_sh_evals=base_evals,
        gcc_sh_evals=gcc_evals,
        sh_bytes_base=base_bytes,
        sh_bytes_gcc=gcc_bytes,
        sh_bytes_saved=base_bytes - gcc_bytes,
    )
