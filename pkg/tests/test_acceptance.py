"""
Full-size runs: 256x256 frames with thousands of Gaussians
"""

import pytest

from app.cost_model import TrafficLedger
from app.metrics import coverage_report
from app.models.schemas import GccConfig, SceneSpec
from app.pipelines import GccPipeline, render_cmode, render_frame, render_gcc
from app.scene_io import gen_scene
from tests.conftest import matched_configs

pytestmark = pytest.mark.slow

SEEDS = range(20)


def scene_size(seed: int) -> int:
    """Spread 2k..10k Gaussians over the seeds"""
    return 2000 + (8000 * seed) // (len(SEEDS) - 1)


@pytest.fixture(scope="module")
def full_spec() -> SceneSpec:
    return SceneSpec()


@pytest.mark.parametrize("seed", SEEDS)
def test_matched_gcc_is_bit_identical_to_tiles(full_spec, seed):
    model = gen_scene(seed, scene_size(seed), full_spec)
    render_cfg, gcc_cfg = matched_configs()
    tile = render_frame(model, full_spec.camera, render_cfg, TrafficLedger())
    gcc = render_gcc(model, full_spec.camera, gcc_cfg, TrafficLedger())
    assert gcc.same_pixels(tile)


def test_mixed_opacity_scene_saves_alpha_evaluations(full_spec):
    model = gen_scene(5, 1000, full_spec)
    result = GccPipeline(GccConfig()).run(model, full_spec.camera)
    assert result.ok
    assert result.ledger.ops["alpha_evals"] <= 0.7 * coverage_report(model, full_spec.camera).aabb_px


def test_large_subviews_match_full_frame_and_loads_grow(full_spec):
    cam = full_spec.camera
    model = gen_scene(11, 3000, full_spec)
    full = render_gcc(model, cam, GccConfig(), TrafficLedger())
    loads = []
    for size in (128, 64, 32, 16):
        ledger = TrafficLedger()
        image = render_cmode(model, cam, GccConfig(cmode=size), ledger)
        if size == 128:
            assert image.same_pixels(full)
        loads.append(ledger.category_bytes("gauss3d_attr"))
    assert loads == sorted(loads)
