"""
Base pipeline class for frame rendering
"""

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import structlog

from app.cost_model.ledger import TrafficLedger
from app.exceptions import SplatError
from app.models.gaussian_model import GaussianModel
from app.models.schemas import Camera, FrameStats, OutputImage, PipelineKind

logger = structlog.get_logger(__name__)


@dataclass
class RenderResult:
    """Outcome of one pipeline run"""
    pipeline: PipelineKind
    status: str = "running"
    image: Optional[OutputImage] = None
    ledger: Optional[TrafficLedger] = None
    stats: Optional[FrameStats] = None
    stage: Optional[str] = None
    error: Optional[str] = None
    wall_time_s: float = 0.0
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "success"


class BasePipeline(ABC):
    """
    Abstract base class for renderers

    Subclasses implement render(); run() wraps it with timing, logging and
    failure capture so callers get a RenderResult either way.
    """

    kind: PipelineKind = PipelineKind.TILE

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))
        self.stage = "setup"

    @abstractmethod
    def render(self, model: GaussianModel, cam: Camera, ledger: TrafficLedger) -> Tuple[OutputImage, FrameStats]:
        """
        Render one frame, recording traffic into ledger
        Returns the image and per-frame stats
        """
        pass

    def enter(self, stage: str) -> None:
        """Mark the stage currently executing (reported on failure)"""
        self.stage = stage
        logger.debug("stage_started", pipeline=self.kind.value, stage=stage)

    def run(self, model: GaussianModel, cam: Camera, ledger: Optional[TrafficLedger] = None) -> RenderResult:
        """
        Execute a full frame: render -> finalize
        """
        ledger = ledger if ledger is not None else TrafficLedger(self.kind.value)
        result = RenderResult(pipeline=self.kind, ledger=ledger)
        start = time.perf_counter()
        self.stage = "setup"

        try:
            logger.info("render_started", pipeline=self.kind.value, gaussians=model.count,
                        width=cam.width, height=cam.height, threads=self.threads)
            image, stats = self.render(model, cam, ledger)
            result.image = image
            result.stats = stats
            result.status = "success"
            logger.info("render_completed", pipeline=self.kind.value,
                        bytes_total=ledger.bytes_total, ops_total=ledger.ops_total,
                        rendered=stats.rendered)

        except (SplatError, ValueError, ArithmeticError) as e:
            logger.error("render_failed", pipeline=self.kind.value, stage=self.stage, error=str(e))
            result.status = "failed"
            result.stage = self.stage
            result.error = str(e)

        result.wall_time_s = time.perf_counter() - start
        return result
