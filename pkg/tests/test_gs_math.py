import math

import numpy as np
import pytest

from app.exceptions import MathDomainError, SingularCovarianceError
from app.gs_math import (
    SymMat2,
    alpha,
    blend_step,
    build_covariance3d,
    build_exp_lut,
    eigenvalues_2x2,
    eval_sh,
    invert_2x2,
    jacobian,
    project_covariance,
    project_to_screen,
    quadratic_min_on_rect,
    radius_3sigma,
    radius_omega_sigma,
    support_level,
    view_transform,
)
from app.gs_math.exp_lut import LUT_LOWER
from app.gs_math.raster import alpha_values, ellipse_row_spans, footprint_rect
from app.gs_math.sh import C0, eval_sh_batch
from app.gs_math.transforms import (
    build_covariance3d_batch,
    eigenvalues_2x2_batch,
    invert_2x2_batch,
    jacobian_batch,
    project_covariance_batch,
)
from app.models.schemas import ExpMode
from tests.conftest import make_camera, make_splat


def random_rotations(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def rotation_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


# =============================================================================
# VIEW / SCREEN
# =============================================================================

def test_view_transform_identity():
    cam = make_camera()
    assert view_transform(np.array([1.0, 2.0, 3.0]), cam) == pytest.approx([1.0, 2.0, 3.0])


def test_view_transform_translation():
    view = np.eye(4)
    view[2, 3] = 5.0
    cam = make_camera(view=view.tolist())
    assert view_transform(np.zeros(3), cam) == pytest.approx([0.0, 0.0, 5.0])


def test_view_transform_matches_matrix_multiply():
    view = np.eye(4)
    view[:3, :3] = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]  # 90 degrees about y
    cam = make_camera(view=view.tolist())
    expected = (view @ np.array([1.0, 0.0, 0.0, 1.0]))[:3]
    result = view_transform(np.array([1.0, 0.0, 0.0]), cam)
    assert result == pytest.approx(expected)
    assert abs(result[2]) == pytest.approx(1.0)


def test_project_to_screen_examples():
    cam = make_camera(128, 128, focal=100.0)
    assert project_to_screen(np.array([0.0, 0.0, 1.0]), cam) == pytest.approx([64.0, 64.0])
    assert project_to_screen(np.array([1.0, 0.0, 2.0]), cam) == pytest.approx([114.0, 64.0])
    with pytest.raises(MathDomainError):
        project_to_screen(np.array([0.0, 0.0, 0.0]), cam)


# =============================================================================
# COVARIANCE
# =============================================================================

def test_build_covariance3d_examples():
    assert build_covariance3d(np.array([2.0, 1.0, 1.0]), np.array([1.0, 0.0, 0.0, 0.0])) == \
        pytest.approx(np.diag([4.0, 1.0, 1.0]))
    q = np.array([0.3, -0.5, 0.7, 0.1])
    q /= np.linalg.norm(q)
    assert build_covariance3d(np.ones(3), q) == pytest.approx(np.eye(3))
    half = math.sqrt(0.5)
    rotated = build_covariance3d(np.array([2.0, 1.0, 1.0]), np.array([half, 0.0, 0.0, half]))
    assert rotated == pytest.approx(np.diag([1.0, 4.0, 1.0]), abs=1e-12)


def test_covariance3d_symmetric_psd_with_squared_scale_eigenvalues(rng):
    n = 10_000
    scales = np.exp(rng.uniform(-3.0, 1.0, size=(n, 3)))
    quats = random_rotations(rng, n)
    cov = build_covariance3d_batch(scales, quats)
    assert np.array_equal(cov, np.transpose(cov, (0, 2, 1)))
    eig = np.linalg.eigvalsh(cov)
    assert np.all(eig > -1e-9)
    assert eig == pytest.approx(np.sort(scales ** 2, axis=1), rel=1e-5, abs=1e-9)


def test_covariance3d_matches_dense_oracle(rng):
    for _ in range(200):
        s = np.exp(rng.uniform(-2.0, 1.0, size=3))
        q = random_rotations(rng, 1)[0]
        r = rotation_matrix(q)
        oracle = r @ np.diag(s) @ np.diag(s).T @ r.T
        assert build_covariance3d(s, q) == pytest.approx(oracle, abs=1e-6)


def test_jacobian_examples():
    unit = make_camera(focal=1.0)
    assert jacobian(np.array([0.0, 0.0, 1.0]), unit) == pytest.approx(np.array([[1, 0, 0], [0, 1, 0]]))
    assert jacobian(np.array([0.0, 0.0, 2.0]), make_camera(focal=100.0))[0, 0] == pytest.approx(50.0)
    assert jacobian(np.array([1.0, 0.0, 1.0]), unit)[0, 2] == pytest.approx(-1.0)
    with pytest.raises(MathDomainError):
        jacobian(np.array([0.0, 0.0, -1.0]), unit)


def test_project_covariance_examples():
    jac = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert project_covariance(np.eye(3), np.eye(3), jac, 0.0) == SymMat2(1.0, 0.0, 1.0)
    dilated = project_covariance(np.eye(3), np.eye(3), jac, 0.3)
    assert (dilated.a, dilated.b, dilated.c) == pytest.approx((1.3, 0.0, 1.3))


def test_project_covariance_matches_matrix_product(rng):
    n = 10_000
    cov3d = build_covariance3d_batch(np.exp(rng.uniform(-2.0, 0.5, size=(n, 3))), random_rotations(rng, n))
    w = rotation_matrix(random_rotations(rng, 1)[0])
    mu = np.stack([rng.uniform(-2, 2, n), rng.uniform(-2, 2, n), rng.uniform(0.5, 8.0, n)], axis=1)
    jac = jacobian_batch(mu, 120.0, 90.0)
    a, b, c = project_covariance_batch(cov3d, w, jac, 0.3)
    oracle = jac @ w @ cov3d @ w.T @ np.transpose(jac, (0, 2, 1))
    assert a == pytest.approx(oracle[:, 0, 0] + 0.3, rel=1e-6, abs=1e-6)
    assert b == pytest.approx(oracle[:, 0, 1], rel=1e-6, abs=1e-6)
    assert c == pytest.approx(oracle[:, 1, 1] + 0.3, rel=1e-6, abs=1e-6)


# =============================================================================
# 2x2 HELPERS
# =============================================================================

def test_eigenvalues_examples():
    assert eigenvalues_2x2(SymMat2(4.0, 0.0, 1.0)) == pytest.approx((4.0, 1.0))
    assert eigenvalues_2x2(SymMat2(2.0, 1.0, 2.0)) == pytest.approx((3.0, 1.0))
    assert eigenvalues_2x2(SymMat2(2.5, 0.0, 2.5)) == pytest.approx((2.5, 2.5))


def test_eigenvalues_and_inverse_match_numpy(rng):
    n = 10_000
    m = rng.normal(size=(n, 2, 2))
    spd = m @ np.transpose(m, (0, 2, 1)) + 0.1 * np.eye(2)
    a, b, c = spd[:, 0, 0], spd[:, 0, 1], spd[:, 1, 1]
    l1, l2 = eigenvalues_2x2_batch(a, b, c)
    oracle = np.linalg.eigvalsh(spd)
    assert l1 == pytest.approx(oracle[:, 1], rel=1e-6, abs=1e-6)
    assert l2 == pytest.approx(oracle[:, 0], rel=1e-6, abs=1e-6)
    inv_a, inv_b, inv_c, ok = invert_2x2_batch(a, b, c)
    inverse = np.linalg.inv(spd)
    assert ok.all()
    assert inv_a == pytest.approx(inverse[:, 0, 0], rel=1e-6, abs=1e-6)
    assert inv_b == pytest.approx(inverse[:, 0, 1], rel=1e-6, abs=1e-6)
    assert inv_c == pytest.approx(inverse[:, 1, 1], rel=1e-6, abs=1e-6)


def test_invert_examples():
    assert invert_2x2(SymMat2(1.0, 0.0, 1.0)) == SymMat2(1.0, 0.0, 1.0)
    inv = invert_2x2(SymMat2(4.0, 0.0, 1.0))
    assert (inv.a, inv.b, inv.c) == pytest.approx((0.25, 0.0, 1.0))
    with pytest.raises(SingularCovarianceError):
        invert_2x2(SymMat2(1.0, 1.0, 1.0))


# =============================================================================
# RADIUS LAWS
# =============================================================================

def test_radius_3sigma_examples():
    assert radius_3sigma(4.0) == 6
    assert radius_3sigma(0.0) == 0
    assert radius_3sigma(2.0) == 5


def test_radius_omega_sigma_examples():
    assert radius_omega_sigma(4.0, 1.0) == 7
    assert radius_omega_sigma(4.0, 1.0 / 255.0) == 0
    assert radius_omega_sigma(100.0, 1.0 / 300.0) == 0
    assert radius_omega_sigma(4.0, 1.0) == math.ceil(math.sqrt(2.0 * math.log(255.0) * 4.0))


def test_radius_laws_cross_at_known_opacity(rng):
    crossover = math.exp(4.5) / 255.0
    for _ in range(500):
        lam = float(rng.uniform(0.01, 400.0))
        opacity = float(rng.uniform(0.005, 0.99))
        if abs(opacity - crossover) < 1e-3:
            continue
        omega, three = radius_omega_sigma(lam, opacity), radius_3sigma(lam)
        if opacity > crossover:
            assert omega >= three
        else:
            assert omega <= three


# =============================================================================
# SPHERICAL HARMONICS
# =============================================================================

SH_TERMS = [
    lambda x, y, z: 0.28209479177387814,
    lambda x, y, z: -0.4886025119029199 * y,
    lambda x, y, z: 0.4886025119029199 * z,
    lambda x, y, z: -0.4886025119029199 * x,
    lambda x, y, z: 1.0925484305920792 * x * y,
    lambda x, y, z: -1.0925484305920792 * y * z,
    lambda x, y, z: 0.31539156525252005 * (2 * z * z - x * x - y * y),
    lambda x, y, z: -1.0925484305920792 * x * z,
    lambda x, y, z: 0.5462742152960396 * (x * x - y * y),
    lambda x, y, z: -0.5900435899266435 * y * (3 * x * x - y * y),
    lambda x, y, z: 2.890611442640554 * x * y * z,
    lambda x, y, z: -0.4570457994644658 * y * (4 * z * z - x * x - y * y),
    lambda x, y, z: 0.3731763325901154 * z * (2 * z * z - 3 * x * x - 3 * y * y),
    lambda x, y, z: -0.4570457994644658 * x * (4 * z * z - x * x - y * y),
    lambda x, y, z: 1.445305721320277 * z * (x * x - y * y),
    lambda x, y, z: -0.5900435899266435 * x * (x * x - 3 * y * y),
]


def test_eval_sh_offset_only():
    assert eval_sh(np.zeros(48), np.array([0.0, 0.0, 1.0])) == pytest.approx([0.5, 0.5, 0.5])


def test_eval_sh_dc_only():
    sh = np.zeros(48)
    sh[[0, 16, 32]] = [1.0, 0.5, -0.25]
    expected = [1.0 * C0 + 0.5, 0.5 * C0 + 0.5, -0.25 * C0 + 0.5]
    assert eval_sh(sh, np.array([0.6, 0.0, 0.8])) == pytest.approx(expected)


def test_eval_sh_matches_basis_table(rng):
    n = 10_000
    sh = rng.normal(0.0, 0.3, size=(n, 48))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    result = eval_sh_batch(sh, dirs)
    for i in range(0, n, 97):
        x, y, z = dirs[i]
        basis = np.array([term(x, y, z) for term in SH_TERMS])
        coeffs = sh[i].reshape(3, 16)
        oracle = np.maximum(coeffs @ basis + 0.5, 0.0)
        assert result[i] == pytest.approx(oracle, abs=1e-6)


# =============================================================================
# ALPHA / BLEND
# =============================================================================

def test_alpha_clamps_at_center():
    g = make_splat((10.0, 10.0), opacity=1.0)
    assert alpha((10.0, 10.0), g) == pytest.approx(0.99)


def test_alpha_exact_value():
    g = make_splat((0.0, 0.0), cov=(1.0, 0.0, 1.0), opacity=0.5)
    assert alpha((1.0, 1.0), g, ExpMode.EXACT) == pytest.approx(0.5 * math.exp(-1.0), rel=1e-12)
    assert alpha((1.0, 1.0), g, ExpMode.EXACT) == pytest.approx(0.18394, abs=1e-5)


def test_alpha_lut_clamps_far_tail():
    g = make_splat((0.0, 0.0), cov=(1.0, 0.0, 1.0), opacity=1.0)
    # exponent -0.5 * 12 = -6 <= -5.54
    assert alpha((math.sqrt(6.0), math.sqrt(6.0)), g, ExpMode.LUT) == 0.0


def test_blend_step_examples():
    t, accum = blend_step(1.0, 0.5, np.array([1.0, 0.0, 0.0]), np.zeros(3))
    assert t == pytest.approx(0.5)
    assert accum == pytest.approx([0.5, 0.0, 0.0])

    same_t, same = blend_step(0.7, 0.0, np.array([1.0, 1.0, 1.0]), np.array([0.1, 0.2, 0.3]))
    assert same_t == 0.7
    assert same == pytest.approx([0.1, 0.2, 0.3])

    t, accum = 1.0, np.zeros(3)
    for a, c in ((0.5, 1.0), (0.5, 0.0)):
        t, accum = blend_step(t, a, np.full(3, c), accum)
    assert accum[0] == pytest.approx(0.5)
    assert t == pytest.approx(0.25)


def test_blend_conservation(rng):
    for _ in range(10_000 // 100):
        alphas = rng.uniform(0.0, 0.99, size=100)
        t, accum = 1.0, np.zeros(3)
        for a in alphas[: rng.integers(1, 100)]:
            t, accum = blend_step(t, a, np.ones(3), accum)
        assert 1.0 - t == pytest.approx(accum[0], abs=1e-6)


# =============================================================================
# EXP LUT
# =============================================================================

def test_exp_lut_relative_error(rng):
    lut = build_exp_lut()
    x = rng.uniform(LUT_LOWER, 0.0, size=100_000)
    x = x[x > LUT_LOWER]
    rel = np.abs(lut(x) - np.exp(x)) / np.exp(x)
    assert rel.max() < 0.01
    assert lut.max_rel_error < 0.01


def test_exp_lut_spot_values():
    lut = build_exp_lut()
    assert lut(np.array([-1e-9]))[0] == pytest.approx(1.0, rel=0.01)
    assert lut(np.array([-1.0]))[0] == pytest.approx(math.exp(-1.0), rel=0.01)
    assert lut(np.array([-10.0]))[0] == 0.0
    assert lut.segments == 16


# =============================================================================
# FOOTPRINT GEOMETRY
# =============================================================================

def test_footprint_rect_floors_both_ends():
    assert footprint_rect((10.5, 3.2), 2) == (8, 12, 1, 5)


def test_quadratic_min_on_rect_inside_is_zero():
    q, point = quadratic_min_on_rect(5.0, 5.0, (1.0, 0.2, 0.5), (0.0, 10.0, 0.0, 10.0))
    assert q == 0.0
    assert point == (5.0, 5.0)


def test_quadratic_min_on_rect_matches_grid_search(rng):
    for _ in range(200):
        g = make_splat((rng.uniform(-20, 40), rng.uniform(-20, 40)),
                       cov=(rng.uniform(0.5, 9.0), rng.uniform(-0.4, 0.4), rng.uniform(0.5, 9.0)))
        conic = (g.inv_cov.a, g.inv_cov.b, g.inv_cov.c)
        x0, y0 = rng.uniform(0, 15, size=2)
        rect = (x0, x0 + rng.uniform(1, 15), y0, y0 + rng.uniform(1, 15))
        q, (px, py) = quadratic_min_on_rect(*g.mean2d, conic, rect)
        assert rect[0] - 1e-9 <= px <= rect[1] + 1e-9
        assert rect[2] - 1e-9 <= py <= rect[3] + 1e-9
        gx, gy = np.meshgrid(np.linspace(rect[0], rect[1], 121), np.linspace(rect[2], rect[3], 121))
        dx, dy = gx - g.mean2d[0], gy - g.mean2d[1]
        grid = conic[0] * dx * dx + 2 * conic[1] * dx * dy + conic[2] * dy * dy
        assert q <= grid.min() + 1e-9


@pytest.mark.parametrize("exp_mode", [ExpMode.EXACT, ExpMode.LUT])
def test_support_level_bounds_passing_pixels(rng, exp_mode):
    alpha_min = 1.0 / 255.0
    for _ in range(100):
        g = make_splat((rng.uniform(0, 32), rng.uniform(0, 32)),
                       cov=(rng.uniform(0.5, 9.0), rng.uniform(-0.4, 0.4), rng.uniform(0.5, 9.0)),
                       opacity=rng.uniform(0.01, 1.0))
        conic = (g.inv_cov.a, g.inv_cov.b, g.inv_cov.c)
        ys, xs = np.mgrid[-10:45, -10:45]
        px, py = xs.ravel() + 0.5, ys.ravel() + 0.5
        values = alpha_values(px, py, *g.mean2d, conic, g.log_opacity, exp_mode)
        dx, dy = px - g.mean2d[0], py - g.mean2d[1]
        q = conic[0] * dx * dx + 2 * conic[1] * dx * dy + conic[2] * dy * dy
        level = support_level(g.log_opacity, alpha_min, exp_mode)
        assert np.all(q[values >= alpha_min] <= level)


def test_ellipse_row_spans_match_grid_scan(rng):
    rows = np.arange(-2, 40)
    xs = np.arange(-2, 40)
    for _ in range(50):
        mx, my = rng.uniform(5.0, 30.0, size=2)
        sx, sy = rng.uniform(0.5, 5.0, size=2)
        rho = rng.uniform(-0.8, 0.8)
        det = (sx * sy) ** 2 * (1.0 - rho * rho)
        conic = (sy * sy / det, -rho * sx * sy / det, sx * sx / det)
        level = rng.uniform(0.5, 12.0)
        lo, hi = ellipse_row_spans(mx, my, conic, level, rows)
        for y, l, h in zip(rows.tolist(), lo.tolist(), hi.tolist()):
            dx = xs + 0.5 - mx
            dy = y + 0.5 - my
            inside = xs[conic[0] * dx * dx + 2.0 * conic[1] * dx * dy + conic[2] * dy * dy <= level]
            assert set(range(max(l, -2), min(h, 39) + 1)) == set(inside.tolist())
