"""
Roofline Time Model
Coarse analytic time estimate: max(compute time, memory time)
"""

import math
from typing import Dict, Iterable, List

import pandas as pd
import structlog

from app.cost_model.ledger import TrafficLedger
from app.exceptions import MathDomainError
from app.models.schemas import CostEstimate

logger = structlog.get_logger(__name__)

SWEEP_COLUMNS = ["pipeline", "bandwidth", "bytes_total", "ops_total",
                 "compute_time", "memory_time", "est_time", "bound"]


class RooflineModel:
    """
    Estimates frame time for ledgers at a fixed compute rate
    """

    def __init__(self, compute_rate: float):
        if not compute_rate > 0:
            raise MathDomainError(f"compute rate must be positive, got {compute_rate}")
        self.compute_rate = float(compute_rate)

    def estimate(self, ledger: TrafficLedger, bandwidth: float) -> CostEstimate:
        """
        Estimate one ledger at one bandwidth

        Args:
            ledger: completed frame ledger
            bandwidth: bytes/s, must be positive (math.inf allowed)

        Returns:
            CostEstimate with est_time = max(ops / compute_rate, bytes / bandwidth)
        """
        if not bandwidth > 0:
            raise MathDomainError(f"bandwidth must be positive, got {bandwidth}")
        compute_time = ledger.ops_total / self.compute_rate
        memory_time = ledger.bytes_total / bandwidth
        est_time = max(compute_time, memory_time)
        return CostEstimate(
            bytes_total=ledger.bytes_total,
            ops_total=ledger.ops_total,
            compute_rate=self.compute_rate,
            bandwidth=bandwidth,
            compute_time=compute_time,
            memory_time=memory_time,
            est_time=est_time,
            bound="compute" if compute_time >= memory_time else "memory",
        )

    def plateau_bandwidth(self, ledger: TrafficLedger) -> float:
        """Bandwidth above which the ledger is compute-bound (bytes * rate / ops)"""
        if ledger.ops_total == 0:
            return 0.0 if ledger.bytes_total == 0 else math.inf
        return ledger.bytes_total * self.compute_rate / ledger.ops_total

    def sweep(self, ledgers: Dict[str, TrafficLedger], bandwidths: Iterable[float]) -> pd.DataFrame:
        """One row per (pipeline, bandwidth), bandwidths ascending within each pipeline"""
        bandwidths = sorted(float(b) for b in bandwidths)
        rows: List[Dict] = []
        for pipeline in sorted(ledgers):
            for bandwidth in bandwidths:
                estimate = self.estimate(ledgers[pipeline], bandwidth)
                rows.append({
                    "pipeline": pipeline,
                    "bandwidth": bandwidth,
                    "bytes_total": estimate.bytes_total,
                    "ops_total": estimate.ops_total,
                    "compute_time": estimate.compute_time,
                    "memory_time": estimate.memory_time,
                    "est_time": estimate.est_time,
                    "bound": estimate.bound,
                })
        logger.debug("bandwidth_sweep", pipelines=len(ledgers), points=len(bandwidths))
        return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def estimate(ledger: TrafficLedger, compute_rate: float, bandwidth: float) -> CostEstimate:
    return RooflineModel(compute_rate).estimate(ledger, bandwidth)


def sweep_bandwidth(
    ledgers: Dict[str, TrafficLedger], compute_rate: float, bandwidths: Iterable[float]
) -> pd.DataFrame:
    """est_time per (pipeline, bandwidth); raises MathDomainError on non-positive bandwidth"""
    return RooflineModel(compute_rate).sweep(ledgers, bandwidths)


def plateau_bandwidth(ledger: TrafficLedger, compute_rate: float) -> float:
    return RooflineModel(compute_rate).plateau_bandwidth(ledger)


def is_monotone(table: pd.DataFrame) -> bool:
    """True when est_time never increases with bandwidth within a pipeline"""
    for _, rows in table.groupby("pipeline", sort=True):
        times = rows.sort_values("bandwidth")["est_time"].to_numpy()
        if any(later > earlier for earlier, later in zip(times, times[1:])):
            return False
    return True
