"""
Splat Dataflow Lab - Scene and image I/O
"""

from app.scene_io.camera_io import load_camera, parse_cameras, save_cameras
from app.scene_io.image_io import image_format, read_image, write_image
from app.scene_io.ply_model import load_model, save_model
from app.scene_io.synthetic import gen_scene

__all__ = [
    "gen_scene",
    "image_format",
    "load_camera",
    "load_model",
    "parse_cameras",
    "read_image",
    "save_cameras",
    "save_model",
    "write_image",
]
