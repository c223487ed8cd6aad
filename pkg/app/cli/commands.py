"""
Command handlers
Each sub-command loads its inputs, runs the pipelines and writes exactly one report
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd
import structlog
from pydantic import ValidationError

from app.cli.manifest import input_file, new_manifest, write_manifest
from app.cli.parser import model_from_args
from app.config import Settings, get_settings
from app.cost_model import (
    CATEGORY_SCALARS,
    RooflineModel,
    TrafficLedger,
    is_monotone,
    per_gaussian_load_stats,
    unused_preprocess_fraction,
)
from app.exceptions import CameraValidationError, OutputWriteError, SplatError, StageError, UndefinedMetricError
from app.metrics import quality_report, totals_of
from app.metrics.coverage import coverage_table
from app.models.gaussian_model import GaussianModel
from app.models.schemas import Camera, GccConfig, InputFile, PipelineKind, RenderConfig, RunManifest, SceneSpec
from app.pipelines import GccPipeline, RenderResult, TilePipeline
from app.scene_io import gen_scene, image_format, load_camera, load_model, save_cameras, save_model, write_image

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

Scene = Tuple[GaussianModel, Camera, Dict[str, InputFile]]


class CommandHandler:
    """
    Dispatches parsed arguments to the sub-command handlers

    The stage attribute names the step in progress so failures can say
    where they happened.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.stage = "setup"
        self.handlers: Dict[str, Callable[[argparse.Namespace], int]] = {
            "render": self.cmd_render,
            "compare": self.cmd_compare,
            "stats": self.cmd_stats,
            "sweep": self.cmd_sweep,
            "gen-scene": self.cmd_gen_scene,
        }

    def enter(self, stage: str) -> None:
        self.stage = stage
        logger.debug("command_stage", stage=stage)

    def dispatch(self, args: argparse.Namespace) -> int:
        """Run one command and map failures to exit codes"""
        handler = self.handlers.get(args.command)
        if handler is None:
            self._fail(f"unknown command {args.command!r}")
            return EXIT_USAGE

        self.stage = "setup"
        logger.info("command_started", command=args.command)
        try:
            status = handler(args)
        except ValidationError as e:
            if self.stage == "config":
                self._fail(f"invalid configuration: {e}")
                return EXIT_USAGE
            self._fail(f"{self.stage}: {e}")
            return EXIT_FAILURE
        except StageError as e:
            self._fail(str(e))
            return EXIT_FAILURE
        except (SplatError, ValueError, OSError) as e:
            self._fail(f"{self.stage}: {e}")
            return EXIT_FAILURE

        logger.info("command_completed", command=args.command, status=status)
        return status

    def _fail(self, message: str) -> None:
        logger.error("command_failed", stage=self.stage, error=message)
        print(f"splatflow: error: {message}", file=sys.stderr)

    # -------------------------------------------------------------------------
    # Shared steps
    # -------------------------------------------------------------------------

    def _configs(self, args: argparse.Namespace) -> Tuple[RenderConfig, GccConfig]:
        self.enter("config")
        return model_from_args(RenderConfig, args), model_from_args(GccConfig, args)

    def _load_scene(self, args: argparse.Namespace) -> Scene:
        self.enter("load_model")
        model = load_model(args.model)
        inputs = {"model": input_file(args.model)}

        self.enter("load_camera")
        cameras = load_camera(args.cameras)
        if not 0 <= args.camera_index < len(cameras):
            raise CameraValidationError(
                f"camera index {args.camera_index} out of range ({len(cameras)} cameras)")
        inputs["cameras"] = input_file(args.cameras)
        return model, cameras[args.camera_index], inputs

    def _run(self, pipeline, model: GaussianModel, cam: Camera) -> RenderResult:
        self.enter(f"render_{pipeline.kind.value}")
        result = pipeline.run(model, cam)
        if not result.ok:
            raise StageError(f"render_{pipeline.kind.value}/{result.stage}", result.error or "failed")
        return result

    def _report_path(self, args: argparse.Namespace) -> Path:
        if getattr(args, "report", None):
            return Path(args.report)
        out = getattr(args, "out", None)
        if out:
            return Path(out).with_suffix(".json")
        return Path(f"{args.command.replace('-', '_')}_report.json")

    def _finish(self, manifest: RunManifest, args: argparse.Namespace, started: float) -> Path:
        self.enter("write_report")
        manifest.wall_time_s = time.perf_counter() - started
        return write_manifest(manifest, self._report_path(args))

    def _check_image_paths(self, *paths: Optional[str]) -> None:
        """Fail on an unwritable image extension before any rendering"""
        self.enter("config")
        for path in paths:
            if path:
                image_format(path)

    def _write_image(self, result: RenderResult, path: str) -> None:
        self.enter("write_image")
        write_image(result.image, path)

    def _write_csv(self, table: pd.DataFrame, path: str) -> None:
        self.enter("write_csv")
        try:
            table.to_csv(path, index=False)
        except OSError as e:
            raise OutputWriteError(path, e) from e

    @staticmethod
    def _scene_config(args: argparse.Namespace) -> Dict[str, Any]:
        return {"camera_index": args.camera_index, "threads": args.threads}

    @staticmethod
    def _frame_stats(result: RenderResult) -> Dict[str, Any]:
        return {**result.stats.model_dump(mode="json"), "render_time_s": result.wall_time_s}

    # -------------------------------------------------------------------------
    # Commands
    # -------------------------------------------------------------------------

    def cmd_render(self, args: argparse.Namespace) -> int:
        started = time.perf_counter()
        self._check_image_paths(args.out)
        render_cfg, gcc_cfg = self._configs(args)
        kind = PipelineKind(args.pipeline)
        if kind == PipelineKind.TILE:
            pipeline, cfg = TilePipeline(render_cfg, args.threads), render_cfg
        else:
            pipeline, cfg = GccPipeline(gcc_cfg, args.threads), gcc_cfg

        model, cam, inputs = self._load_scene(args)
        result = self._run(pipeline, model, cam)
        self._write_image(result, args.out)

        manifest = new_manifest(
            "render",
            config={**self._scene_config(args), "pipeline": kind.value, kind.value: cfg.model_dump(mode="json")},
            inputs=inputs,
            outputs={"image": str(args.out)},
            ledger=result.ledger.to_report(),
            stats=self._frame_stats(result),
        )
        self._finish(manifest, args, started)
        return EXIT_OK

    def cmd_compare(self, args: argparse.Namespace) -> int:
        started = time.perf_counter()
        self._check_image_paths(args.tile_out, args.gcc_out)
        render_cfg, gcc_cfg = self._configs(args)
        if args.matched:
            gcc_cfg = gcc_cfg.matched_to(render_cfg)

        model, cam, inputs = self._load_scene(args)
        tile = self._run(TilePipeline(render_cfg, args.threads), model, cam)
        gcc = self._run(GccPipeline(gcc_cfg, args.threads), model, cam)

        self.enter("compare")
        quality = quality_report(tile.image, gcc.image)
        try:
            savings: Optional[Dict[str, Any]] = unused_preprocess_fraction(tile.ledger, gcc.ledger).model_dump()
        except UndefinedMetricError as e:
            logger.warning("unused_preprocess_undefined", reason=str(e))
            savings = None

        outputs: Dict[str, str] = {}
        if args.tile_out:
            self._write_image(tile, args.tile_out)
            outputs["tile_image"] = str(args.tile_out)
        if args.gcc_out:
            self._write_image(gcc, args.gcc_out)
            outputs["gcc_image"] = str(args.gcc_out)

        summary = ledger_summary({"tile": tile.ledger, "gcc": gcc.ledger})
        print(summary.to_string(index=False))

        manifest = new_manifest(
            "compare",
            config={
                **self._scene_config(args),
                "matched": bool(args.matched),
                "tile": render_cfg.model_dump(mode="json"),
                "gcc": gcc_cfg.model_dump(mode="json"),
            },
            inputs=inputs,
            outputs=outputs,
            ledger={
                "tile": tile.ledger.to_report(),
                "gcc": gcc.ledger.to_report(),
                "delta": ledger_delta(tile.ledger, gcc.ledger),
            },
            quality={**quality.model_dump(), "unused_preprocess": savings},
            stats={"tile": self._frame_stats(tile), "gcc": self._frame_stats(gcc)},
        )
        self._finish(manifest, args, started)
        return EXIT_OK

    def cmd_stats(self, args: argparse.Namespace) -> int:
        started = time.perf_counter()
        render_cfg, gcc_cfg = self._configs(args)
        model, cam, inputs = self._load_scene(args)

        self.enter("coverage")
        table = coverage_table(model, cam, render_cfg)
        totals = totals_of(table)

        tile = self._run(TilePipeline(render_cfg, args.threads), model, cam)
        gcc = self._run(GccPipeline(gcc_cfg, args.threads), model, cam)

        outputs: Dict[str, str] = {}
        if args.csv:
            self._write_csv(table, args.csv)
            outputs["csv"] = str(args.csv)

        manifest = new_manifest(
            "stats",
            config={
                **self._scene_config(args),
                "tile": render_cfg.model_dump(mode="json"),
                "gcc": gcc_cfg.model_dump(mode="json"),
            },
            inputs=inputs,
            outputs=outputs,
            stats={
                "coverage": totals.model_dump(),
                "loads": {
                    "tile": per_gaussian_load_stats(tile.ledger).model_dump(),
                    "gcc": per_gaussian_load_stats(gcc.ledger).model_dump(),
                },
            },
        )
        self._finish(manifest, args, started)
        return EXIT_OK

    def cmd_sweep(self, args: argparse.Namespace) -> int:
        started = time.perf_counter()
        render_cfg, gcc_cfg = self._configs(args)
        model, cam, inputs = self._load_scene(args)
        tile = self._run(TilePipeline(render_cfg, args.threads), model, cam)
        gcc = self._run(GccPipeline(gcc_cfg, args.threads), model, cam)

        self.enter("sweep")
        roofline = RooflineModel(args.compute_rate)
        ledgers = {"tile": tile.ledger, "gcc": gcc.ledger}
        table = roofline.sweep(ledgers, args.bandwidths)
        monotone = is_monotone(table)
        print(table.to_string(index=False))

        outputs: Dict[str, str] = {}
        if args.csv:
            self._write_csv(table, args.csv)
            outputs["csv"] = str(args.csv)

        manifest = new_manifest(
            "sweep",
            config={
                **self._scene_config(args),
                "bandwidths": sorted(float(b) for b in args.bandwidths),
                "compute_rate": float(args.compute_rate),
                "tile": render_cfg.model_dump(mode="json"),
                "gcc": gcc_cfg.model_dump(mode="json"),
            },
            inputs=inputs,
            outputs=outputs,
            ledger={name: ledger.to_report() for name, ledger in ledgers.items()},
            stats={
                "sweep": table.to_dict(orient="records"),
                "plateau_bandwidth": {name: roofline.plateau_bandwidth(ledger) for name, ledger in ledgers.items()},
                "monotone": monotone,
            },
        )
        self._finish(manifest, args, started)
        if not monotone:
            self._fail("estimated time increases with bandwidth")
            return EXIT_FAILURE
        return EXIT_OK

    def cmd_gen_scene(self, args: argparse.Namespace) -> int:
        started = time.perf_counter()
        self.enter("config")
        cam = Camera(width=args.width, height=args.height, fx=args.fx, fy=args.fy,
                     cx=args.width / 2.0, cy=args.height / 2.0)
        spec = model_from_args(SceneSpec, args, camera=cam)

        self.enter("generate")
        model = gen_scene(args.seed, args.n, spec)

        self.enter("write_model")
        save_model(model, args.out)
        outputs = {"model": str(args.out)}
        if args.cameras_out:
            self.enter("write_cameras")
            save_cameras([cam], args.cameras_out)
            outputs["cameras"] = str(args.cameras_out)

        manifest = new_manifest(
            "gen-scene",
            config={"n": args.n, "scene": spec.model_dump(mode="json")},
            outputs=outputs,
            stats={"gaussians": model.count},
            seed=args.seed,
        )
        self._finish(manifest, args, started)
        return EXIT_OK


# =============================================================================
# LEDGER TABLES
# =============================================================================

def ledger_summary(ledgers: Dict[str, TrafficLedger]) -> pd.DataFrame:
    """One row per pipeline: totals, SH work and mean attribute loads"""
    rows: List[Dict[str, Any]] = []
    for name, ledger in ledgers.items():
        loads = per_gaussian_load_stats(ledger)
        rows.append({
            "pipeline": name,
            "bytes_total": ledger.bytes_total,
            "ops_total": ledger.ops_total,
            "sh_evals": ledger.ops["sh_evals"],
            "alpha_evals": ledger.ops["alpha_evals"],
            "mean_loads": loads.mean,
            "max_loads": loads.max,
        })
    return pd.DataFrame(rows)


def ledger_delta(base: TrafficLedger, other: TrafficLedger) -> Dict[str, Any]:
    """other - base per category and op, with total ratios (None when base is zero)"""
    base_bytes, other_bytes = base.bytes_by_category, other.bytes_by_category
    return {
        "bytes": {c: other_bytes[c] - base_bytes[c] for c in CATEGORY_SCALARS},
        "ops": {op: other.ops[op] - base.ops[op] for op in base.ops},
        "bytes_ratio": other.bytes_total / base.bytes_total if base.bytes_total else None,
        "ops_ratio": other.ops_total / base.ops_total if base.ops_total else None,
    }
