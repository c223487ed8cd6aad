"""
Error hierarchy for Splat Dataflow Lab
"""

from typing import Optional


class SplatError(Exception):
    """Base class for all domain errors"""


# =============================================================================
# INPUT ERRORS
# =============================================================================

class ModelFormatError(SplatError):
    """Model file is not a usable binary point cloud"""

    def __init__(self, message: str, property_name: Optional[str] = None):
        super().__init__(message)
        self.property_name = property_name


class ModelDataError(SplatError):
    """Model file contains a non-finite value"""

    def __init__(self, message: str, vertex_index: int):
        super().__init__(message)
        self.vertex_index = vertex_index


class CameraValidationError(SplatError, ValueError):
    """Camera file or camera invariants are invalid"""


class ConfigError(SplatError, ValueError):
    """Invalid rendering or scene configuration"""


# =============================================================================
# NUMERIC ERRORS
# =============================================================================

class MathDomainError(SplatError, ValueError):
    """Kernel called outside its domain (z <= 0, zero bandwidth, ...)"""


class SingularCovarianceError(SplatError, ArithmeticError):
    """2D covariance determinant at or below the singularity epsilon"""


class UndefinedMetricError(SplatError, ArithmeticError):
    """Metric has no defined value for the given inputs"""


class ImageShapeError(SplatError, ValueError):
    """Images being compared have different dimensions"""


class ImageFormatError(SplatError, ValueError):
    """Image path has an extension no writer handles"""


# =============================================================================
# ACCOUNTING / OUTPUT ERRORS
# =============================================================================

class UnknownCategoryError(SplatError, KeyError):
    """Traffic category not known to the ledger"""


class OutputWriteError(SplatError):
    """Writing an image or report failed"""

    def __init__(self, path: str, cause: BaseException):
        super().__init__(f"cannot write {path}: {cause}")
        self.path = path
        self.cause = cause


class StageError(SplatError):
    """A command step failed; names the step for the exit message"""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
