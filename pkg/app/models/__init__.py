"""
Splat Dataflow Lab - Data Models
"""

from app.models.schemas import (
    BoundaryMode,
    Camera,
    CostEstimate,
    CoverageTotals,
    ExpMode,
    FrameStats,
    Gaussian3D,
    GccConfig,
    InputFile,
    LoadStats,
    OutputImage,
    PipelineKind,
    PreprocessSavings,
    QualityReport,
    RadiusLaw,
    RenderConfig,
    RunManifest,
    SceneLayout,
    SceneSpec,
)

from app.models.gaussian_model import GaussianModel

__all__ = [
    # Enumerations
    "BoundaryMode",
    "ExpMode",
    "PipelineKind",
    "RadiusLaw",
    "SceneLayout",
    # Scene
    "Camera",
    "Gaussian3D",
    "GaussianModel",
    "OutputImage",
    "SceneSpec",
    # Configuration
    "GccConfig",
    "RenderConfig",
    # Reports
    "CostEstimate",
    "CoverageTotals",
    "FrameStats",
    "InputFile",
    "LoadStats",
    "PreprocessSavings",
    "QualityReport",
    "RunManifest",
]
