"""
Command-line parser

Configuration flags are generated from the pydantic config models, so every
flag default is the model field default.
"""

import argparse
import types
import typing
from enum import Enum
from typing import Any, Dict, Iterable, List, Sequence, Type, TypeVar

from pydantic import BaseModel

from app.config import get_settings
from app.models.schemas import GccConfig, PipelineKind, RenderConfig, SceneSpec

M = TypeVar("M", bound=BaseModel)

HELP_FORMAT = argparse.ArgumentDefaultsHelpFormatter


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return value


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _show(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if value is None:
        return "off"
    if isinstance(value, tuple):
        return " ".join(str(v) for v in value)
    return str(value)


def _argument_kwargs(annotation: Any) -> Dict[str, Any]:
    origin = typing.get_origin(annotation)
    if origin in (typing.Union, getattr(types, "UnionType", typing.Union)):
        inner = [arg for arg in typing.get_args(annotation) if arg is not type(None)]
        return _argument_kwargs(inner[0])
    if annotation is bool:
        return {"action": argparse.BooleanOptionalAction}
    if isinstance(annotation, type) and issubclass(annotation, Enum):
        return {"type": str, "choices": [member.value for member in annotation]}
    if origin is tuple:
        return {"type": float, "nargs": len(typing.get_args(annotation)), "metavar": ("R", "G", "B")}
    return {"type": annotation}


def add_model_flags(
    parser: argparse.ArgumentParser,
    models: Sequence[Type[BaseModel]],
    title: str,
    skip: Iterable[str] = (),
) -> None:
    """
    One flag per model field; a field shared by several models becomes one flag

    Unset flags are absent from the namespace, so the models apply their own defaults.
    """
    skip = set(skip)
    fields: Dict[str, List] = {}
    for model in models:
        for name, info in model.model_fields.items():
            if name not in skip:
                fields.setdefault(name, []).append((model, info))

    group = parser.add_argument_group(title)
    for name, entries in fields.items():
        info = entries[0][1]
        defaults = ", ".join(f"{model.__name__} {_show(field.default)}" for model, field in entries)
        description = f"{info.description}; " if info.description else ""
        group.add_argument(
            _flag(name),
            dest=name,
            default=argparse.SUPPRESS,
            help=f"{description}default: {defaults}",
            **_argument_kwargs(info.annotation),
        )


def model_from_args(model: Type[M], args: argparse.Namespace, **overrides: Any) -> M:
    """Build a config model from the flags present in args"""
    values = {name: getattr(args, name) for name in model.model_fields if hasattr(args, name)}
    values.update(overrides)
    return model(**values)


def _add_scene_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="Gaussian model file (.ply)")
    parser.add_argument("--cameras", required=True, help="Camera file (.json)")
    parser.add_argument("--camera-index", type=int, default=0, help="Camera to render")
    parser.add_argument("--report", help="JSON report path")


def _add_execution(parser: argparse.ArgumentParser) -> None:
    threads = get_settings().threads
    parser.add_argument("--threads", type=positive_int, default=threads,
                        help="Worker threads")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="splatflow",
        description="Tile-wise vs Gaussian-wise 3D Gaussian Splatting rendering with traffic accounting",
        formatter_class=HELP_FORMAT,
    )
    parser.add_argument("--log-level", default=None, help="Override SPLAT_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    render = sub.add_parser("render", help="Render one view with one pipeline", formatter_class=HELP_FORMAT)
    render.add_argument("--pipeline", required=True, choices=[kind.value for kind in PipelineKind])
    _add_scene_inputs(render)
    render.add_argument("--out", required=True, help="Output image (.ppm or .png)")
    _add_execution(render)
    add_model_flags(render, [RenderConfig, GccConfig], "rendering configuration")

    compare = sub.add_parser("compare", help="Render with both pipelines and compare", formatter_class=HELP_FORMAT)
    _add_scene_inputs(compare)
    compare.add_argument("--tile-out", help="Write the tile image here (.ppm or .png)")
    compare.add_argument("--gcc-out", help="Write the Gaussian-wise image here (.ppm or .png)")
    compare.add_argument("--matched", action="store_true",
                         help="Use the tile radius law for the Gaussian-wise pipeline too")
    _add_execution(compare)
    add_model_flags(compare, [RenderConfig, GccConfig], "rendering configuration")

    stats = sub.add_parser("stats", help="Coverage totals and per-Gaussian load histograms", formatter_class=HELP_FORMAT)
    _add_scene_inputs(stats)
    stats.add_argument("--csv", help="Per-Gaussian coverage CSV path")
    _add_execution(stats)
    add_model_flags(stats, [RenderConfig, GccConfig], "rendering configuration")

    sweep = sub.add_parser("sweep", help="Roofline time estimate over a bandwidth list", formatter_class=HELP_FORMAT)
    _add_scene_inputs(sweep)
    sweep.add_argument("--bandwidths", type=positive_float, nargs="+",
                       default=list(settings.sweep_bandwidths), help="Bytes/s values")
    sweep.add_argument("--compute-rate", type=positive_float, default=settings.compute_rate,
                       help="Operations/s")
    sweep.add_argument("--csv", help="Sweep table CSV path")
    _add_execution(sweep)
    add_model_flags(sweep, [RenderConfig, GccConfig], "rendering configuration")

    gen = sub.add_parser("gen-scene", help="Write a seeded synthetic model", formatter_class=HELP_FORMAT)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n", type=positive_int, required=True, help="Number of Gaussians")
    gen.add_argument("--out", required=True, help="Model file (.ply)")
    gen.add_argument("--cameras-out", help="Also write the scene camera file")
    gen.add_argument("--report", help="JSON report path")
    gen.add_argument("--width", type=positive_int, default=256)
    gen.add_argument("--height", type=positive_int, default=256)
    gen.add_argument("--fx", type=positive_float, default=300.0, help="Focal length in pixels")
    gen.add_argument("--fy", type=positive_float, default=300.0, help="Focal length in pixels")
    add_model_flags(gen, [SceneSpec], "scene distribution", skip=("camera",))
    return parser
