import math

import numpy as np
import pytest

from app.exceptions import ImageShapeError
from app.metrics import QualityCalculator, coverage_report, coverage_table, psnr, quality_report, totals_of
from app.models.gaussian_model import GaussianModel
from app.models.schemas import GccConfig, OutputImage, SceneSpec
from app.scene_io import gen_scene
from tests.conftest import make_model


def image(value, shape=(4, 4)):
    return OutputImage(rgb=np.full(shape + (3,), value))


# =============================================================================
# QUALITY
# =============================================================================

def test_identical_images_are_exact_match():
    report = quality_report(image(0.3), image(0.3))
    assert math.isinf(report.psnr)
    assert report.exact_match
    assert report.max_abs_err == 0.0
    assert report.pixel_count == 16


def test_uniform_error_gives_twenty_db():
    assert psnr(image(0.2), image(0.3)) == pytest.approx(20.0)


def test_psnr_is_symmetric(rng):
    a = OutputImage(rgb=rng.uniform(size=(8, 6, 3)))
    b = OutputImage(rgb=rng.uniform(size=(8, 6, 3)))
    assert psnr(a, b) == psnr(b, a)


def test_mismatched_shapes_rejected():
    with pytest.raises(ImageShapeError):
        psnr(image(0.0, (4, 4)), image(0.0, (4, 5)))


def test_custom_peak():
    assert QualityCalculator(peak=2.0).psnr(image(0.2), image(0.3)) == pytest.approx(20.0 + 20.0 * math.log10(2.0))


def test_report_marks_inexact_match():
    report = quality_report(image(0.5), image(0.25))
    assert not report.exact_match
    assert report.max_abs_err == pytest.approx(0.25)


# =============================================================================
# COVERAGE
# =============================================================================

def test_opaque_isotropic_scene_alpha_below_aabb(camera):
    spec = SceneSpec(camera=camera, opacity_min=0.9, opacity_max=1.0, scale_min=0.05, scale_max=0.05)
    totals = coverage_report(gen_scene(2, 200, spec), camera)
    assert totals.gaussians > 0
    assert totals.alpha_px < totals.aabb_px
    assert totals.obb_px <= totals.aabb_px


def test_invisible_scene_has_no_alpha_pixels(camera):
    model = make_model([[0.0, 0.0, 3.0], [0.1, 0.1, 5.0]], [[0.1] * 3] * 2, [1.0 / 255.0] * 2)
    totals = coverage_report(model, camera)
    assert totals.alpha_px == 0
    assert totals.aabb_px > 0


def test_empty_model_gives_zero_totals(camera):
    totals = coverage_report(GaussianModel.empty(), camera)
    assert (totals.gaussians, totals.aabb_px, totals.obb_px, totals.alpha_px) == (0, 0, 0, 0)


def test_table_rows_match_totals(small_scene, camera):
    table = coverage_table(small_scene, camera)
    totals = totals_of(table)
    assert totals.gaussians == len(table)
    assert totals.alpha_px == int(table["alpha_px"].sum())
    assert (table["alpha_px"] <= table["aabb_px"]).all()


def test_opacity_aware_radius_shrinks_bounding_boxes(small_scene, camera):
    three_sigma = coverage_report(small_scene, camera)
    omega = coverage_report(small_scene, camera, GccConfig())
    assert omega.gaussians <= three_sigma.gaussians
    assert omega.alpha_px <= three_sigma.alpha_px
