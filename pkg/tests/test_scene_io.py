import json

import numpy as np
import pytest
from plyfile import PlyData, PlyElement

from app.exceptions import CameraValidationError, ConfigError, ImageFormatError, ModelDataError, ModelFormatError
from app.models.schemas import OutputImage, SceneLayout, SceneSpec
from app.scene_io import gen_scene, load_camera, load_model, parse_cameras, read_image, save_cameras, save_model, write_image
from app.scene_io.ply_model import _attribute_names
from tests.conftest import make_camera


def write_vertices(path, overrides=None, drop=(), text=False, count=1):
    names = [name for name in _attribute_names() if name not in drop]
    vertices = np.zeros(count, dtype=[(name, "f4") for name in names])
    if "rot_0" in names:
        vertices["rot_0"] = 1.0
    for name, value in (overrides or {}).items():
        vertices[name] = value
    PlyData([PlyElement.describe(vertices, "vertex")], text=text).write(str(path))
    return path


# =============================================================================
# MODEL FILES
# =============================================================================

def test_load_model_applies_activations(tmp_path):
    path = write_vertices(tmp_path / "one.ply", {"opacity": 0.0, "rot_0": 2.0})
    model = load_model(path)
    assert model.count == 1
    gaussian = model.gaussian(0)
    assert gaussian.opacity == pytest.approx(0.5)
    assert gaussian.scale == pytest.approx((1.0, 1.0, 1.0))
    assert gaussian.rotation == pytest.approx((1.0, 0.0, 0.0, 0.0))


def test_load_model_without_normals(tmp_path):
    path = write_vertices(tmp_path / "bare.ply", drop=("nx", "ny", "nz"))
    assert load_model(path).count == 1


def test_missing_property_is_named(tmp_path):
    path = write_vertices(tmp_path / "partial.ply", drop=("scale_1",))
    with pytest.raises(ModelFormatError) as info:
        load_model(path)
    assert info.value.property_name == "scale_1"


def test_ascii_model_rejected(tmp_path):
    path = write_vertices(tmp_path / "ascii.ply", text=True)
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.ply")


def test_non_finite_value_reports_vertex(tmp_path):
    path = write_vertices(tmp_path / "nan.ply", {"x": [0.0, 0.0, np.nan]}, count=3)
    with pytest.raises(ModelDataError) as info:
        load_model(path)
    assert info.value.vertex_index == 2


def test_model_round_trip(tmp_path, scene_spec):
    model = gen_scene(3, 200, scene_spec)
    path = tmp_path / "scene.ply"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.count == model.count
    np.testing.assert_allclose(loaded.positions, model.positions, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(loaded.sh, model.sh, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(loaded.opacities, model.opacities, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(loaded.scales, model.scales, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(loaded.rotations, model.rotations, rtol=1e-6, atol=1e-6)


# =============================================================================
# CAMERAS
# =============================================================================

def camera_entry(**overrides):
    entry = {"width": 200, "height": 200, "fx": 100.0, "fy": 100.0, "cx": 100.0, "cy": 100.0,
             "view": np.eye(4).tolist()}
    entry.update(overrides)
    return entry


def test_valid_camera(tmp_path):
    path = tmp_path / "cams.json"
    path.write_text(json.dumps({"schema_version": 1, "cameras": [camera_entry()]}))
    cameras = load_camera(path)
    assert len(cameras) == 1
    assert cameras[0].fx == 100.0


def test_zero_focal_rejected():
    with pytest.raises(CameraValidationError):
        parse_cameras([camera_entry(fx=0.0)])


def test_scaled_rotation_rejected():
    view = np.eye(4)
    view[0, 0] = 2.0
    with pytest.raises(CameraValidationError):
        parse_cameras({"cameras": [camera_entry(view=view.tolist())]})


def test_bad_json_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(CameraValidationError):
        load_camera(path)


def test_camera_round_trip(tmp_path):
    cameras = [make_camera(48, 32), make_camera(64, 64, focal=120.0)]
    path = tmp_path / "cams.json"
    save_cameras(cameras, path)
    loaded = load_camera(path)
    assert [c.model_dump() for c in loaded] == [c.model_dump() for c in cameras]


# =============================================================================
# SYNTHETIC SCENES
# =============================================================================

def test_gen_scene_deterministic():
    a, b = gen_scene(1, 10), gen_scene(1, 10)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.sh, b.sh)
    assert np.array_equal(a.rotations, b.rotations)


def test_gen_scene_opacity_range():
    model = gen_scene(5, 500, SceneSpec(opacity_min=0.01, opacity_max=1.0))
    assert model.opacities.min() >= 0.01
    assert model.opacities.max() <= 1.0


def test_gen_scene_seeds_differ():
    assert not np.array_equal(gen_scene(1, 1000).positions, gen_scene(2, 1000).positions)


def test_gen_scene_requires_gaussians():
    with pytest.raises(ConfigError):
        gen_scene(0, 0)


def test_gen_scene_inside_depth_range(scene_spec):
    model = gen_scene(9, 400, scene_spec)
    depths = model.positions[:, 2]
    assert depths.min() >= scene_spec.depth_min - 1e-9
    assert depths.max() <= scene_spec.depth_max + 1e-9


def test_occluder_wall_layout(wall_spec):
    model = gen_scene(4, 1000, wall_spec)
    assert model.count == 1000
    near = model.positions[:, 2] < wall_spec.depth_min
    assert 0 < near.sum() <= 100
    assert model.opacities[near] == pytest.approx(wall_spec.wall_opacity)


def test_scene_spec_ranges_validated():
    with pytest.raises(ValueError):
        SceneSpec(depth_min=5.0, depth_max=2.0)
    with pytest.raises(ValueError):
        SceneSpec(layout=SceneLayout.OCCLUDER_WALL, wall_depth=3.0, depth_min=2.0)


# =============================================================================
# IMAGES
# =============================================================================

def test_write_white_pixel(tmp_path):
    path = tmp_path / "white.ppm"
    write_image(OutputImage(rgb=np.ones((1, 1, 3))), path)
    assert path.read_bytes() == b"P6\n1 1\n255\n\xff\xff\xff"


def test_quantization_rounds_half_up_and_clamps(tmp_path):
    path = tmp_path / "mixed.ppm"
    write_image(OutputImage(rgb=np.array([[[0.5, -0.1, 1.2]]])), path)
    assert path.read_bytes()[-3:] == bytes([128, 0, 255])


def test_png_round_trip(tmp_path):
    rgb = np.linspace(0.0, 1.0, 4 * 5 * 3).reshape(4, 5, 3)
    path = tmp_path / "ramp.png"
    write_image(OutputImage(rgb=rgb), path)
    back = read_image(path)
    assert back.rgb.shape == (4, 5, 3)
    assert np.abs(back.rgb - rgb).max() <= 0.5 / 255.0 + 1e-12


def test_png_extension_writes_png_bytes(tmp_path):
    path = tmp_path / "pixel.PNG"
    write_image(OutputImage(rgb=np.ones((1, 1, 3))), path)
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("name", ["frame.jpg", "frame.bmp", "frame"])
def test_unsupported_image_extension_rejected(tmp_path, name):
    path = tmp_path / name
    with pytest.raises(ImageFormatError):
        write_image(OutputImage(rgb=np.ones((1, 1, 3))), path)
    assert not path.exists()
