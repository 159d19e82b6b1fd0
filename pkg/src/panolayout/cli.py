"""Command-line pipeline: synth, reproject, pseudo-label, metric, evaluate,
refine, render-density.

Exit codes: 0 success, 2 usage error, 3 scene format/validation error,
4 numeric or degenerate-geometry error. Failures emit a machine-readable
JSON object on stderr. All subcommands are deterministic given their flags
and seeds; MLC_THREADS may cap internal parallelism but never changes
results (the current implementation is single-threaded).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import consistency, evaluation, pseudolabel, selftrain, sceneio, synth
from .errors import LayoutError, SceneFormatError
from .geometry import BoundaryKind
from .reprojection import build_stack

logger = logging.getLogger(__name__)

_ROOMS = ("square", "lshape", "ngon")


def _thread_cap() -> int | None:
    raw = os.environ.get("MLC_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
        if cap < 1:
            raise ValueError
    except ValueError:
        logger.warning("ignoring invalid MLC_THREADS=%r", raw)
        return None
    return cap


def _load(args):
    return sceneio.load_scene(args.scene, pixel_rows=args.pixel_rows)


def _kind(name: str) -> BoundaryKind:
    return BoundaryKind(name)


def cmd_synth(args) -> int:
    if args.room == "square":
        room = synth.square_room(args.size, args.floor_height, args.ceil_height)
    elif args.room == "lshape":
        room = synth.lshape_room(args.size, args.floor_height, args.ceil_height)
    else:
        room = synth.ngon_room(args.sides, args.size / 2.0,
                               args.floor_height, args.ceil_height)
    scene = synth.generate_scene(room, args.n_views, args.width, args.seed)
    noise = synth.NoiseSpec(
        boundary_std=args.noise_boundary_std,
        outlier_rate=args.noise_outlier_rate,
        outlier_std=args.noise_outlier_std,
        pose_trans_std=args.noise_pose_trans_std,
        pose_rot_std=args.noise_pose_rot_std,
        seed=args.seed if args.noise_seed is None else args.noise_seed)
    if (noise.boundary_std or noise.outlier_rate or noise.pose_trans_std
            or noise.pose_rot_std):
        scene = synth.perturb(scene, noise)
    sceneio.save_scene(scene, args.out)
    return 0


def cmd_reproject(args) -> int:
    scene = _load(args)
    stack = build_stack(scene, args.target, _kind(args.kind))
    sceneio.write_stack_csv(stack, args.out)
    return 0


def cmd_pseudo_label(args) -> int:
    scene = _load(args)
    kind = _kind(args.kind)
    contributors = selftrain.select_views(scene.view_ids, args.view_fraction)
    labels = {}
    for f in scene.frames:
        stack = build_stack(scene, f.view_id, kind, view_ids=contributors)
        labels[f.view_id] = pseudolabel.fuse(stack, args.estimator, args.sigma_floor)
    scene.pseudo_labels = labels
    sceneio.save_scene(scene, args.out)
    if args.out_csv:
        os.makedirs(args.out_csv, exist_ok=True)
        for vid, pl in labels.items():
            sceneio.write_pseudolabel_csv(
                pl, os.path.join(args.out_csv, f"{vid}.csv"))
    return 0


def _density_grid(scene, args):
    polys = scene.world_polylines(floor_only=args.floor_only)
    return consistency.density_map(polys, args.grid[0], args.grid[1], args.padding)


def cmd_metric(args) -> int:
    scene = _load(args)
    grid = _density_grid(scene, args)
    h = consistency.mlc_entropy(grid)
    if args.out_map:
        consistency.render_density(grid, args.out_map)
    if args.out:
        sceneio.write_density_csv(consistency.occupied_cells(grid), args.out)
    sys.stdout.write(f"H_MLC={sceneio.format_float(h)}\n")
    return 0


def cmd_evaluate(args) -> int:
    scene = _load(args)
    if scene.ground_truth is None:
        raise SceneFormatError("evaluate requires a ground_truth block")
    report = evaluation.evaluate_scene(scene, raster=args.raster)
    sceneio.write_report_json(report, args.out)
    if args.out_csv:
        sceneio.write_report_csv(report, args.out_csv)
    return 0


def cmd_refine(args) -> int:
    scene = _load(args)
    cfg = selftrain.TrainConfig(
        max_iters=args.iters, damping=args.damping, estimator=args.estimator,
        loss=args.loss, sigma_floor=args.sigma_floor,
        view_fraction=args.view_fraction, eval_every=args.eval_every,
        grid_size=args.grid[0], padding=args.padding)
    trajectory, best = selftrain.run(scene, cfg)
    sceneio.write_trajectory_csv(trajectory.records, args.out_traj)
    sceneio.save_scene(best, args.out_scene)
    return 0


def cmd_render_density(args) -> int:
    scene = _load(args)
    grid = _density_grid(scene, args)
    consistency.render_density(grid, args.out)
    return 0


def _add_scene_arg(p):
    p.add_argument("--scene", required=True, help="scene JSON path")
    p.add_argument("--pixel-rows", action="store_true",
                   help="boundaries in the scene file are pixel rows, not radians")


def _add_grid_args(p):
    p.add_argument("--grid", nargs=2, type=int, default=[512, 512],
                   metavar=("U", "V"), help="density grid size")
    p.add_argument("--padding", type=float, default=0.05,
                   help="bounding-box padding fraction")
    p.add_argument("--floor-only", action="store_true",
                   help="use floor boundaries only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="panolayout",
        description="Multi-view layout-consistency pipeline for 360 panoramas")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multi-view scene")
    p.add_argument("--room", choices=_ROOMS, default="square")
    p.add_argument("--size", type=float, default=4.0,
                   help="room extent in meters (ngon: diameter)")
    p.add_argument("--sides", type=int, default=6, help="ngon side count")
    p.add_argument("--n-views", type=int, default=5)
    p.add_argument("--width", type=int, default=256, help="panorama columns W")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--floor-height", type=float, default=1.6)
    p.add_argument("--ceil-height", type=float, default=0.9)
    p.add_argument("--noise-boundary-std", type=float, default=0.0)
    p.add_argument("--noise-outlier-rate", type=float, default=0.0)
    p.add_argument("--noise-outlier-std", type=float, default=0.0)
    p.add_argument("--noise-pose-trans-std", type=float, default=0.0)
    p.add_argument("--noise-pose-rot-std", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reproject", help="dump one target view's boundary stack")
    _add_scene_arg(p)
    p.add_argument("--target", required=True, help="target view id")
    p.add_argument("--kind", choices=("floor", "ceiling"), default="floor")
    p.add_argument("--out", required=True, help="stack CSV path")
    p.set_defaults(func=cmd_reproject)

    p = sub.add_parser("pseudo-label", help="fuse pseudo-labels for every view")
    _add_scene_arg(p)
    p.add_argument("--estimator", choices=pseudolabel.ESTIMATORS, default="median")
    p.add_argument("--sigma-floor", type=float,
                   default=pseudolabel.SIGMA_FLOOR_DEFAULT)
    p.add_argument("--view-fraction", type=float, default=1.0)
    p.add_argument("--kind", choices=("floor", "ceiling"), default="floor")
    p.add_argument("--out", required=True, help="scene JSON with pseudo_labels")
    p.add_argument("--out-csv", default=None,
                   help="directory for per-view pseudo-label CSVs")
    p.set_defaults(func=cmd_pseudo_label)

    p = sub.add_parser("metric", help="print the multi-view consistency entropy")
    _add_scene_arg(p)
    _add_grid_args(p)
    p.add_argument("--out-map", default=None, help="density map PGM path")
    p.add_argument("--out", default=None, help="occupied-cell CSV path")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("evaluate", help="layout metrics against ground truth")
    _add_scene_arg(p)
    p.add_argument("--raster", type=int, default=evaluation.RASTER_DEFAULT)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--out-csv", default=None, help="per-view metric CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("refine", help="consensus self-training with early stopping")
    _add_scene_arg(p)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--lambda", dest="damping", type=float, default=0.5)
    p.add_argument("--loss", choices=selftrain.LOSSES, default="wbc")
    p.add_argument("--estimator", choices=pseudolabel.ESTIMATORS, default="median")
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--sigma-floor", type=float,
                   default=pseudolabel.SIGMA_FLOOR_DEFAULT)
    p.add_argument("--view-fraction", type=float, default=1.0)
    p.add_argument("--grid", nargs=2, type=int, default=[512, 512],
                   metavar=("U", "V"))
    p.add_argument("--padding", type=float, default=0.05)
    p.add_argument("--out-traj", required=True, help="trajectory CSV path")
    p.add_argument("--out-scene", required=True, help="best snapshot JSON path")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("render-density", help="write the density map as PGM")
    _add_scene_arg(p)
    _add_grid_args(p)
    p.add_argument("--out", required=True, help="PGM path")
    p.set_defaults(func=cmd_render_density)

    return ap


def _emit_error(exc: Exception) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    sys.stderr.write(json.dumps(payload) + "\n")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    _thread_cap()  # validated for forward compatibility; results never depend on it
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneFormatError as e:
        _emit_error(e)
        return 3
    except LayoutError as e:
        _emit_error(e)
        return 4
    except ValueError as e:
        _emit_error(e)
        return 2
    except OSError as e:
        _emit_error(e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
