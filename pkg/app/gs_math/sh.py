"""
Degree-3 real spherical harmonics colour evaluation
"""

import numpy as np

C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)

SH_OFFSET = 0.5


def sh_basis_batch(dirs: np.ndarray) -> np.ndarray:
    """The 16 basis values (with their constants) for unit directions (N, 3) -> (N, 16)"""
    d = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    x, y, z = d[:, 0], d[:, 1], d[:, 2]
    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    basis = np.empty((d.shape[0], 16))
    basis[:, 0] = C0
    basis[:, 1] = -C1 * y
    basis[:, 2] = C1 * z
    basis[:, 3] = -C1 * x
    basis[:, 4] = C2[0] * xy
    basis[:, 5] = C2[1] * yz
    basis[:, 6] = C2[2] * (2.0 * zz - xx - yy)
    basis[:, 7] = C2[3] * xz
    basis[:, 8] = C2[4] * (xx - yy)
    basis[:, 9] = C3[0] * y * (3.0 * xx - yy)
    basis[:, 10] = C3[1] * xy * z
    basis[:, 11] = C3[2] * y * (4.0 * zz - xx - yy)
    basis[:, 12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    basis[:, 13] = C3[4] * x * (4.0 * zz - xx - yy)
    basis[:, 14] = C3[5] * z * (xx - yy)
    basis[:, 15] = C3[6] * x * (xx - 3.0 * yy)
    return basis


def eval_sh_batch(sh: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """
    Evaluate RGB for (N, 48) coefficients along (N, 3) unit view directions

    Coefficients are channel-major: 16 for red, then green, then blue.
    The result carries the +0.5 offset and is clamped below at 0.
    """
    coeffs = np.asarray(sh, dtype=np.float64).reshape(-1, 3, 16)
    basis = sh_basis_batch(dirs)
    rgb = np.zeros((coeffs.shape[0], 3))
    for k in range(16):
        rgb += coeffs[:, :, k] * basis[:, k, None]
    return np.maximum(rgb + SH_OFFSET, 0.0)


def eval_sh(sh: np.ndarray, direction: np.ndarray) -> np.ndarray:
    return eval_sh_batch(np.asarray(sh)[None, :], np.asarray(direction)[None, :])[0]


def view_directions(positions: np.ndarray, camera_center: np.ndarray) -> np.ndarray:
    """normalize(position - camera center), element-wise"""
    d = np.asarray(positions, dtype=np.float64).reshape(-1, 3) - np.asarray(camera_center)[None, :]
    norm = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
    norm = np.where(norm > 0.0, norm, 1.0)
    return d / norm[:, None]
