"""Consensus refinement: iterative pseudo-label fusion with damped updates.

Each step re-fuses every view's boundary stack into a pseudo-label and moves
the view's boundary toward it by a damping factor; with the uncertainty-
weighted loss the per-column step shrinks where the views disagree. Early
stopping picks the iteration with the lowest density-map entropy, evaluated
on grid bounds frozen at iteration zero so values stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .consistency import GRID_SIZE_DEFAULT, PADDING_DEFAULT, data_bounds, \
    density_map, mlc_entropy
from .evaluation import floor_polygon, iou2d, iou3d
from .geometry import BoundaryKind, SphericalBoundary, boundary_to_world, \
    ceiling_height
from .pseudolabel import SIGMA_FLOOR_DEFAULT, fuse, l1_loss, wbc_loss
from .reprojection import _stack_from_polylines
from .scene import Scene

LOSSES = ("wbc", "l1")

_TRAJECTORY_IOU_RASTER = 512


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 20
    damping: float = 0.5
    estimator: str = "median"
    loss: str = "wbc"
    sigma_floor: float = SIGMA_FLOOR_DEFAULT
    view_fraction: float = 1.0
    eval_every: int = 1
    grid_size: int = GRID_SIZE_DEFAULT
    padding: float = PADDING_DEFAULT

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must be in (0, 1]")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if not (0.0 < self.view_fraction <= 1.0):
            raise ValueError("view_fraction must be in (0, 1]")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    wbc: float
    l1: float
    h_mlc: float | None = None
    iou2d: float | None = None
    iou3d: float | None = None


@dataclass
class TrainTrajectory:
    records: list[IterationRecord] = field(default_factory=list)
    best_iter: int = 0


def select_views(view_ids: list[str], fraction: float) -> list[str]:
    """Deterministic evenly spaced subset of at least one view."""
    n = len(view_ids)
    m = max(1, int(round(fraction * n)))
    idx = (np.arange(m) * n) // m
    return [view_ids[int(i)] for i in idx]


def _source_polylines(scene: Scene, kind: BoundaryKind, view_ids: list[str]):
    polys = []
    for vid in view_ids:
        f = scene.frame(vid)
        if f.boundary(kind) is None:
            continue
        polys.append(boundary_to_world(f.boundary(kind),
                                       scene.resolved_pose(f, kind), vid))
    return polys


def _fuse_all(scene: Scene, cfg: TrainConfig):
    """Pseudo-labels for every (view, kind) from the configured view subset."""
    contributors = select_views(scene.view_ids, cfg.view_fraction)
    labels = {}
    for kind in scene.kinds():
        polys = _source_polylines(scene, kind, contributors)
        for f in scene.frames:
            stack = _stack_from_polylines(polys, f.pose, f.view_id, kind,
                                          scene.image_width)
            labels[(f.view_id, kind)] = fuse(stack, cfg.estimator, cfg.sigma_floor)
    return labels


def _step_losses(scene: Scene, labels) -> tuple[float, float]:
    wbc_vals, l1_vals = [], []
    for (vid, kind), pl in labels.items():
        b = scene.frame(vid).boundary(kind)
        wbc_vals.append(wbc_loss(b, pl))
        l1_vals.append(l1_loss(b, pl))
    return float(np.mean(wbc_vals)), float(np.mean(l1_vals))


def self_train_step(scene: Scene, cfg: TrainConfig):
    """One synchronous consensus update over all views.

    Stacks are built from the pre-step boundaries of the selected
    contributor views, so per-view updates are order-independent. Returns
    (updated scene, (mean_wbc, mean_l1)) with losses measured before the
    update. With loss="wbc" the per-column step is scaled by
    min(1, sigma_ref^2 / sigma^2), sigma_ref being the view's median sigma,
    which damps updates where the re-projections disagree.
    """
    labels = _fuse_all(scene, cfg)
    losses = _step_losses(scene, labels)
    updates = {}
    for f in scene.frames:
        per_kind = {}
        for kind in scene.kinds():
            pl = labels[(f.view_id, kind)]
            lat = f.boundary(kind).lat
            if cfg.loss == "wbc":
                sigma_ref = float(np.median(pl.sigma))
                step = cfg.damping * np.minimum(1.0, (sigma_ref / pl.sigma) ** 2)
            else:
                step = np.full_like(lat, cfg.damping)
            new_lat = np.where(step >= 1.0, pl.lat_bar, lat + step * (pl.lat_bar - lat))
            per_kind[kind] = SphericalBoundary(new_lat, kind)
        updates[f.view_id] = per_kind
    return scene.with_boundaries(updates), losses


def _mean_iou(scene: Scene) -> tuple[float, float]:
    vals2, vals3 = [], []
    for f in scene.frames:
        gt = scene.ground_truth[f.view_id]
        poly_p = floor_polygon(f.boundary_floor, f.pose)
        poly_g = floor_polygon(gt[BoundaryKind.FLOOR], f.pose)
        vals2.append(iou2d(poly_p, poly_g, _TRAJECTORY_IOU_RASTER))
        gt_c = gt.get(BoundaryKind.CEILING)
        if f.boundary_ceiling is not None and gt_c is not None:
            hf = f.pose.floor_height
            vals3.append(iou3d(
                poly_p, (hf, ceiling_height(f.boundary_floor, f.boundary_ceiling, hf)),
                poly_g, (hf, ceiling_height(gt[BoundaryKind.FLOOR], gt_c, hf)),
                _TRAJECTORY_IOU_RASTER))
    return (float(np.mean(vals2)), float(np.mean(vals3)) if vals3 else None)


def run(scene: Scene, cfg: TrainConfig):
    """Refine for max_iters steps with entropy-based early stopping.

    Returns (TrainTrajectory, best scene). The entropy grid bounds are
    frozen at iteration zero; the snapshot returned is the one recorded at
    the entropy minimum (ties go to the earliest iteration).
    """
    frozen_bounds = data_bounds(scene.world_polylines())
    track_iou = scene.ground_truth is not None

    def entropy_of(s: Scene) -> float:
        grid = density_map(s.world_polylines(), cfg.grid_size, cfg.grid_size,
                           cfg.padding, bounds=frozen_bounds)
        return mlc_entropy(grid)

    records: list[IterationRecord] = []
    snapshots: dict[int, Scene] = {}
    state = scene
    best_iter, best_h = 0, math.inf

    def record(iteration: int, losses, evaluated: bool) -> None:
        nonlocal best_iter, best_h
        rec = IterationRecord(iteration, losses[0], losses[1])
        if evaluated:
            rec.h_mlc = entropy_of(state)
            if track_iou:
                rec.iou2d, rec.iou3d = _mean_iou(state)
            snapshots[iteration] = state
            if rec.h_mlc < best_h:
                best_h, best_iter = rec.h_mlc, iteration
        records.append(rec)

    for k in range(cfg.max_iters):
        next_state, losses = self_train_step(state, cfg)
        record(k, losses, evaluated=k % cfg.eval_every == 0)
        state = next_state
    # Final state needs one label pass of its own for the loss record.
    final_labels = _fuse_all(state, cfg)
    record(cfg.max_iters, _step_losses(state, final_labels), evaluated=True)

    return TrainTrajectory(records, best_iter), snapshots[best_iter]
