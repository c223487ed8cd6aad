"""
Geometric kernels: view transform, perspective projection, EWA covariance projection
Every batched kernel is written element-wise (no BLAS), so the value computed for a
Gaussian does not depend on which other Gaussians share the batch.
"""

from typing import NamedTuple, Tuple

import numpy as np

from app.exceptions import MathDomainError, SingularCovarianceError
from app.models.schemas import Camera

SINGULAR_EPS = 1e-12


class SymMat2(NamedTuple):
    """Symmetric 2x2 matrix [[a, b], [b, c]]"""
    a: float
    b: float
    c: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b, self.c]], dtype=np.float64)


# =============================================================================
# VIEW / SCREEN TRANSFORMS
# =============================================================================

def view_transform_batch(positions: np.ndarray, cam: Camera) -> np.ndarray:
    """World positions (N, 3) to camera space (N, 3)"""
    p = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    r = cam.rotation
    t = cam.translation
    out = np.empty_like(p)
    for row in range(3):
        out[:, row] = r[row, 0] * x + r[row, 1] * y + r[row, 2] * z + t[row]
    return out


def view_transform(mu: np.ndarray, cam: Camera) -> np.ndarray:
    """mu' = W mu + t; the z component is the depth used for grouping and sorting"""
    return view_transform_batch(np.asarray(mu, dtype=np.float64)[None, :], cam)[0]


def project_to_screen_batch(mu_cam: np.ndarray, cam: Camera) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(mu_cam, dtype=np.float64).reshape(-1, 3)
    z = p[:, 2]
    if np.any(z <= 0.0):
        raise MathDomainError("projection requires camera-space z > 0")
    return cam.fx * p[:, 0] / z + cam.cx, cam.fy * p[:, 1] / z + cam.cy


def project_to_screen(mu_cam: np.ndarray, cam: Camera) -> np.ndarray:
    """(fx*x/z + cx, fy*y/z + cy) in pixels"""
    xs, ys = project_to_screen_batch(np.asarray(mu_cam, dtype=np.float64)[None, :], cam)
    return np.array([xs[0], ys[0]])


# =============================================================================
# COVARIANCE
# =============================================================================

def quaternion_to_rotation_batch(quats: np.ndarray) -> np.ndarray:
    """Unit quaternions (w, x, y, z) to rotation matrices (N, 3, 3)"""
    q = np.asarray(quats, dtype=np.float64).reshape(-1, 4)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    rot = np.empty((q.shape[0], 3, 3))
    rot[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    rot[:, 0, 1] = 2.0 * (x * y - w * z)
    rot[:, 0, 2] = 2.0 * (x * z + w * y)
    rot[:, 1, 0] = 2.0 * (x * y + w * z)
    rot[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    rot[:, 1, 2] = 2.0 * (y * z - w * x)
    rot[:, 2, 0] = 2.0 * (x * z - w * y)
    rot[:, 2, 1] = 2.0 * (y * z + w * x)
    rot[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return rot


def build_covariance3d_batch(scales: np.ndarray, quats: np.ndarray) -> np.ndarray:
    """Sigma = R S S^T R^T for (N, 3) scales and (N, 4) quaternions"""
    s = np.asarray(scales, dtype=np.float64).reshape(-1, 3)
    rot = quaternion_to_rotation_batch(quats)
    m = rot * s[:, None, :]
    cov = np.empty_like(m)
    for i in range(3):
        for k in range(i, 3):
            value = m[:, i, 0] * m[:, k, 0] + m[:, i, 1] * m[:, k, 1] + m[:, i, 2] * m[:, k, 2]
            cov[:, i, k] = value
            cov[:, k, i] = value
    return cov


def build_covariance3d(scale: np.ndarray, q: np.ndarray) -> np.ndarray:
    return build_covariance3d_batch(np.asarray(scale)[None, :], np.asarray(q)[None, :])[0]


def jacobian_batch(mu_cam: np.ndarray, fx: float, fy: float) -> np.ndarray:
    """Affine approximation of the perspective projection at each mu_cam, (N, 2, 3)"""
    p = np.asarray(mu_cam, dtype=np.float64).reshape(-1, 3)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    if np.any(z <= 0.0):
        raise MathDomainError("Jacobian requires camera-space z > 0")
    jac = np.zeros((p.shape[0], 2, 3))
    jac[:, 0, 0] = fx / z
    jac[:, 0, 2] = -fx * x / (z * z)
    jac[:, 1, 1] = fy / z
    jac[:, 1, 2] = -fy * y / (z * z)
    return jac


def jacobian(mu_cam: np.ndarray, cam: Camera) -> np.ndarray:
    return jacobian_batch(np.asarray(mu_cam, dtype=np.float64)[None, :], cam.fx, cam.fy)[0]


def project_covariance_batch(
    cov3d: np.ndarray,
    view_rot: np.ndarray,
    jac: np.ndarray,
    dilation: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sigma' = J W Sigma W^T J^T + dilation * I

    Returns:
        (a, b, c) arrays of the symmetric 2x2 result
    """
    w = np.asarray(view_rot, dtype=np.float64)
    n = jac.shape[0]
    t = np.empty((n, 2, 3))
    for i in range(2):
        for k in range(3):
            t[:, i, k] = jac[:, i, 0] * w[0, k] + jac[:, i, 1] * w[1, k] + jac[:, i, 2] * w[2, k]
    u = np.empty((n, 2, 3))
    for i in range(2):
        for k in range(3):
            u[:, i, k] = t[:, i, 0] * cov3d[:, 0, k] + t[:, i, 1] * cov3d[:, 1, k] + t[:, i, 2] * cov3d[:, 2, k]

    def entry(i: int, l: int) -> np.ndarray:
        return u[:, i, 0] * t[:, l, 0] + u[:, i, 1] * t[:, l, 1] + u[:, i, 2] * t[:, l, 2]

    return entry(0, 0) + dilation, entry(0, 1), entry(1, 1) + dilation


def project_covariance(
    cov3d: np.ndarray,
    view_rot: np.ndarray,
    jac: np.ndarray,
    dilation: float = 0.3,
) -> SymMat2:
    a, b, c = project_covariance_batch(
        np.asarray(cov3d, dtype=np.float64)[None], view_rot, np.asarray(jac, dtype=np.float64)[None], dilation)
    return SymMat2(float(a[0]), float(b[0]), float(c[0]))


# =============================================================================
# 2x2 SYMMETRIC HELPERS
# =============================================================================

def eigenvalues_2x2_batch(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mid = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    disc = np.sqrt(np.maximum(0.0, half_diff * half_diff + b * b))
    return mid + disc, mid - disc


def eigenvalues_2x2(m: SymMat2) -> Tuple[float, float]:
    """(lambda1, lambda2) with lambda1 >= lambda2"""
    l1, l2 = eigenvalues_2x2_batch(np.array([m.a]), np.array([m.b]), np.array([m.c]))
    return float(l1[0]), float(l2[0])


def invert_2x2_batch(
    a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns:
        (inv_a, inv_b, inv_c, invertible) where invertible is det > 1e-12;
        inverse entries of non-invertible rows are 0
    """
    det = a * c - b * b
    invertible = det > SINGULAR_EPS
    safe = np.where(invertible, det, 1.0)
    inv_a = np.where(invertible, c / safe, 0.0)
    inv_b = np.where(invertible, -b / safe, 0.0)
    inv_c = np.where(invertible, a / safe, 0.0)
    return inv_a, inv_b, inv_c, invertible


def invert_2x2(m: SymMat2) -> SymMat2:
    inv_a, inv_b, inv_c, ok = invert_2x2_batch(np.array([m.a]), np.array([m.b]), np.array([m.c]))
    if not ok[0]:
        raise SingularCovarianceError(f"determinant {m.a * m.c - m.b * m.b} <= {SINGULAR_EPS}")
    return SymMat2(float(inv_a[0]), float(inv_b[0]), float(inv_c[0]))


# =============================================================================
# RADIUS LAWS
# =============================================================================

def radius_3sigma_batch(lambda_max: np.ndarray) -> np.ndarray:
    return np.ceil(3.0 * np.sqrt(np.maximum(lambda_max, 0.0))).astype(np.int64)


def radius_3sigma(lambda_max: float) -> int:
    """ceil(3 * sqrt(lambda_max))"""
    return int(radius_3sigma_batch(np.array([lambda_max]))[0])


def radius_omega_sigma_batch(lambda_max: np.ndarray, opacity: np.ndarray) -> np.ndarray:
    scaled = 255.0 * np.asarray(opacity, dtype=np.float64)
    visible = scaled > 1.0
    log_term = np.log(np.where(visible, scaled, 1.0))
    radius = np.ceil(np.sqrt(2.0 * log_term * np.maximum(lambda_max, 0.0)))
    return np.where(visible, radius, 0.0).astype(np.int64)


def radius_omega_sigma(lambda_max: float, opacity: float) -> int:
    """ceil(sqrt(2 ln(255 w) lambda_max)); 0 once 255 w <= 1"""
    return int(radius_omega_sigma_batch(np.array([lambda_max]), np.array([opacity]))[0])
