"""Standard layout metrics: 2D/3D IoU, depth RMSE and delta-1.

IoU is computed by even-odd rasterization of both footprints on a shared
grid, which stays well-defined for the self-touching polygons noisy
boundaries can produce. Depth metrics follow the fixed-camera-height
protocol: both prediction and ground truth are scaled to a 1.6 m camera
before comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MetricError
from .geometry import BoundaryKind, CameraPose, DEFAULT_CAMERA_HEIGHT, \
    SphericalBoundary, boundary_to_world, ceiling_height, row_to_latitude
from .scene import Scene

RASTER_DEFAULT = 1024
DELTA_THRESHOLD = 1.25


@dataclass
class LayoutEvalReport:
    """Scene-level metric means plus one entry per view."""

    iou2d: float
    iou3d: float
    rmse: float
    delta1: float
    per_view: list[dict] = field(default_factory=list)


def floor_polygon(b: SphericalBoundary, pose: CameraPose) -> np.ndarray:
    """Footprint polygon (x, z) of a floor boundary, implicitly closed."""
    if b.kind != BoundaryKind.FLOOR:
        raise ValueError("floor_polygon expects a floor boundary")
    pts = boundary_to_world(b, pose).points
    return pts[:, [0, 2]]


def _even_odd_mask(poly: np.ndarray, bounds, raster: int) -> np.ndarray:
    """Even-odd fill of a polygon sampled at raster x raster cell centers."""
    xmin, xmax, ymin, ymax = bounds
    cw = (xmax - xmin) / raster
    ch = (ymax - ymin) / raster
    ys = ymin + (np.arange(raster) + 0.5) * ch
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    mask = np.zeros((raster, raster), dtype=np.int64)
    # Half-open span rule per edge avoids double counting at shared vertices.
    for e in range(poly.shape[0]):
        ya, yb = y1[e], y2[e]
        if ya == yb:
            continue
        lo, hi = (ya, yb) if ya < yb else (yb, ya)
        rows = np.nonzero((ys >= lo) & (ys < hi))[0]
        if rows.size == 0:
            continue
        xc = x1[e] + (ys[rows] - ya) * (x2[e] - x1[e]) / (yb - ya)
        # Crossing contributes to all cells whose center lies right of it.
        cmin = np.floor((xc - xmin) / cw - 0.5).astype(np.int64) + 1
        ok = cmin < raster
        rows, cmin = rows[ok], np.clip(cmin[ok], 0, raster - 1)
        np.add.at(mask, (rows, cmin), 1)
    inside = np.cumsum(mask, axis=1) % 2
    return inside.astype(bool)


def _union_bounds(a: np.ndarray, b: np.ndarray):
    xmin = min(a[:, 0].min(), b[:, 0].min())
    xmax = max(a[:, 0].max(), b[:, 0].max())
    ymin = min(a[:, 1].min(), b[:, 1].min())
    ymax = max(a[:, 1].max(), b[:, 1].max())
    if not (xmax > xmin and ymax > ymin):
        raise MetricError("degenerate polygon extent; IoU undefined")
    return xmin, xmax, ymin, ymax


def _footprint_masks(pred, gt, raster):
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    bounds = _union_bounds(pred, gt)
    return _even_odd_mask(pred, bounds, raster), _even_odd_mask(gt, bounds, raster)


def iou2d(pred: np.ndarray, gt: np.ndarray, raster: int = RASTER_DEFAULT) -> float:
    """Intersection over union of two footprint polygons.

    Both polygons are rasterized on their union bounding box at raster^2
    cells with even-odd fill. Raises MetricError when the union is empty.
    """
    if raster < 64:
        raise ValueError("raster must be >= 64")
    ma, mb = _footprint_masks(pred, gt, raster)
    union = int(np.sum(ma | mb))
    if union == 0:
        raise MetricError("empty polygon union; IoU undefined")
    return float(np.sum(ma & mb) / union)


def iou3d(pred: np.ndarray, pred_heights, gt: np.ndarray, gt_heights,
          raster: int = RASTER_DEFAULT) -> float:
    """Volume IoU of two room prisms given (h_floor, h_ceil) height pairs.

    Each prism spans [-h_ceil, +h_floor] vertically (Y-down camera frame)
    over its footprint; the union follows from inclusion-exclusion.
    """
    if raster < 64:
        raise ValueError("raster must be >= 64")
    hf_a, hc_a = pred_heights
    hf_b, hc_b = gt_heights
    if min(hf_a, hc_a, hf_b, hc_b) <= 0:
        raise ValueError("prism heights must be positive")
    ma, mb = _footprint_masks(pred, gt, raster)
    inter_cells = int(np.sum(ma & mb))
    overlap_v = min(hf_a, hf_b) + min(hc_a, hc_b)
    inter = inter_cells * overlap_v
    vol_a = int(np.sum(ma)) * (hf_a + hc_a)
    vol_b = int(np.sum(mb)) * (hf_b + hc_b)
    union = vol_a + vol_b - inter
    if union <= 0:
        raise MetricError("empty prism union; 3D IoU undefined")
    return float(inter / union)


def layout_depth(b_floor: SphericalBoundary, b_ceil: SphericalBoundary,
                 H: int | None = None,
                 camera_height: float = DEFAULT_CAMERA_HEIGHT) -> np.ndarray:
    """Per-pixel horizontal depth map implied by a boundary pair.

    The camera height is fixed to the evaluation convention (1.6 m); the
    ceiling height follows from the boundary pair at that scale. Wall pixels
    (rows between the ceiling and floor boundary) take the wall distance of
    their column; floor and ceiling pixels take the plane-intersection
    distance of their own latitude. Returns an (H, W) array in meters.
    """
    if b_floor.kind != BoundaryKind.FLOOR or b_ceil.kind != BoundaryKind.CEILING:
        raise ValueError("expected a (floor, ceiling) boundary pair")
    if b_floor.width != b_ceil.width:
        raise ValueError("floor and ceiling boundaries must share W")
    W = b_floor.width
    if H is None:
        H = W // 2
    h_c = ceiling_height(b_floor, b_ceil, camera_height)
    lat_rows = row_to_latitude(np.arange(H), H)[:, None]            # (H, 1)
    lat_f = b_floor.lat[None, :]                                    # (1, W)
    lat_c = b_ceil.lat[None, :]
    d_wall = camera_height / np.tan(-lat_f)                         # (1, W)
    with np.errstate(divide="ignore"):
        depth = np.where(
            lat_rows <= lat_f, camera_height / np.tan(-lat_rows),
            np.where(lat_rows >= lat_c, h_c / np.tan(lat_rows),
                     np.broadcast_to(d_wall, (H, W))))
    bad = ~np.isfinite(depth)
    if np.any(bad):
        raise GeometryError(f"{int(bad.sum())} nonfinite depth pixels")
    return depth


def depth_metrics(pred: np.ndarray, gt: np.ndarray,
                  threshold: float = DELTA_THRESHOLD):
    """(rmse, delta1) between two depth maps on identical pixel grids."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"depth shapes differ: {pred.shape} vs {gt.shape}")
    rmse = float(np.sqrt(np.mean((pred - gt) ** 2)))
    ratio = np.maximum(pred / gt, gt / pred)
    delta1 = float(np.mean(ratio < threshold))
    return rmse, delta1


def evaluate_view(pred_floor, pred_ceil, gt_floor, gt_ceil, pose: CameraPose,
                  H: int, raster: int = RASTER_DEFAULT) -> dict:
    """All four metrics for one view's predicted vs ground-truth boundaries."""
    poly_p = floor_polygon(pred_floor, pose)
    poly_g = floor_polygon(gt_floor, pose)
    hf = pose.floor_height
    heights_p = (hf, ceiling_height(pred_floor, pred_ceil, hf))
    heights_g = (hf, ceiling_height(gt_floor, gt_ceil, hf))
    depth_p = layout_depth(pred_floor, pred_ceil, H)
    depth_g = layout_depth(gt_floor, gt_ceil, H)
    rmse, delta1 = depth_metrics(depth_p, depth_g)
    return {
        "iou2d": iou2d(poly_p, poly_g, raster),
        "iou3d": iou3d(poly_p, heights_p, poly_g, heights_g, raster),
        "rmse": rmse,
        "delta1": delta1,
    }


def evaluate_scene(scene: Scene, raster: int = RASTER_DEFAULT) -> LayoutEvalReport:
    """Evaluate every frame against the scene's ground-truth boundaries.

    Requires a ground_truth block and ceiling boundaries on both sides (3D
    IoU and depth need the full pair).
    """
    if scene.ground_truth is None:
        raise ValueError("scene has no ground_truth block")
    per_view = []
    for f in scene.frames:
        gt = scene.ground_truth.get(f.view_id)
        if gt is None:
            raise ValueError(f"no ground truth for view {f.view_id!r}")
        gt_ceil = gt.get(BoundaryKind.CEILING)
        if f.boundary_ceiling is None or gt_ceil is None:
            raise ValueError(
                f"view {f.view_id!r}: evaluation needs ceiling boundaries")
        row = evaluate_view(f.boundary_floor, f.boundary_ceiling,
                            gt[BoundaryKind.FLOOR], gt_ceil, f.pose,
                            scene.image_height, raster)
        row["view_id"] = f.view_id
        per_view.append(row)
    return LayoutEvalReport(
        iou2d=float(np.mean([r["iou2d"] for r in per_view])),
        iou3d=float(np.mean([r["iou3d"] for r in per_view])),
        rmse=float(np.mean([r["rmse"] for r in per_view])),
        delta1=float(np.mean([r["delta1"] for r in per_view])),
        per_view=per_view)
