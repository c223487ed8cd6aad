"""
Array storage for a full Gaussian model
Structure-of-arrays layout; Gaussian3D records are materialised on demand
"""

from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np

from app.models.schemas import Gaussian3D

SH_COEFFS_PER_CHANNEL = 16
SH_COEFFS = 3 * SH_COEFFS_PER_CHANNEL


@dataclass
class GaussianModel:
    """
    Ordered set of Gaussians; index i is the identity used for depth tie-breaks

    Attributes:
        positions: (N, 3) world positions
        sh: (N, 48) SH coefficients, [dc_r, rest_r(15), dc_g, rest_g(15), dc_b, rest_b(15)]
        opacities: (N,) activated opacities in (0, 1)
        log_opacities: (N,) ln(opacity)
        scales: (N, 3) activated (positive) scales
        rotations: (N, 4) unit quaternions (w, x, y, z)
        source_path: file the model came from, empty for generated models
    """
    positions: np.ndarray
    sh: np.ndarray
    opacities: np.ndarray
    log_opacities: np.ndarray
    scales: np.ndarray
    rotations: np.ndarray
    source_path: str = ""

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        n = self.positions.shape[0]
        self.sh = np.ascontiguousarray(self.sh, dtype=np.float64).reshape(n, SH_COEFFS)
        self.opacities = np.ascontiguousarray(self.opacities, dtype=np.float64).reshape(n)
        self.log_opacities = np.ascontiguousarray(self.log_opacities, dtype=np.float64).reshape(n)
        self.scales = np.ascontiguousarray(self.scales, dtype=np.float64).reshape(n, 3)
        self.rotations = np.ascontiguousarray(self.rotations, dtype=np.float64).reshape(n, 4)

    @classmethod
    def from_activated(
        cls,
        positions: np.ndarray,
        sh: np.ndarray,
        opacities: np.ndarray,
        scales: np.ndarray,
        rotations: np.ndarray,
        source_path: str = "",
    ) -> "GaussianModel":
        """Build a model from activated values, normalising quaternions and deriving ln(opacity)"""
        rotations = np.asarray(rotations, dtype=np.float64).reshape(-1, 4)
        norms = np.linalg.norm(rotations, axis=1, keepdims=True)
        rotations = rotations / np.where(norms > 0.0, norms, 1.0)
        opacities = np.asarray(opacities, dtype=np.float64)
        return cls(
            positions=positions,
            sh=sh,
            opacities=opacities,
            log_opacities=np.log(opacities),
            scales=scales,
            rotations=rotations,
            source_path=source_path,
        )

    @classmethod
    def empty(cls, source_path: str = "") -> "GaussianModel":
        return cls(
            positions=np.zeros((0, 3)),
            sh=np.zeros((0, SH_COEFFS)),
            opacities=np.zeros(0),
            log_opacities=np.zeros(0),
            scales=np.zeros((0, 3)),
            rotations=np.zeros((0, 4)),
            source_path=source_path,
        )

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def __len__(self) -> int:
        return self.count

    def gaussian(self, index: int) -> Gaussian3D:
        """Materialise one validated Gaussian3D record"""
        return Gaussian3D(
            position=tuple(self.positions[index]),
            sh=self.sh[index].tolist(),
            opacity=float(self.opacities[index]),
            log_opacity=float(self.log_opacities[index]),
            scale=tuple(self.scales[index]),
            rotation=tuple(self.rotations[index]),
        )

    @property
    def gaussians(self) -> List[Gaussian3D]:
        return [self.gaussian(i) for i in range(self.count)]

    def __iter__(self) -> Iterator[Gaussian3D]:
        for i in range(self.count):
            yield self.gaussian(i)

    @classmethod
    def from_gaussians(cls, gaussians: Sequence[Gaussian3D], source_path: str = "") -> "GaussianModel":
        if not gaussians:
            return cls.empty(source_path)
        return cls(
            positions=np.array([g.position for g in gaussians]),
            sh=np.array([g.sh for g in gaussians]),
            opacities=np.array([g.opacity for g in gaussians]),
            log_opacities=np.array([g.log_opacity for g in gaussians]),
            scales=np.array([g.scale for g in gaussians]),
            rotations=np.array([g.rotation for g in gaussians]),
            source_path=source_path,
        )
