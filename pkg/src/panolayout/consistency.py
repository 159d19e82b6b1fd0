"""Top-view density map of projected boundaries and its entropy.

Projected boundary points are histogrammed on a U x V grid over the x-z
plane; the entropy of the normalized histogram measures how well the views
agree: tightly aligned layouts concentrate mass in few cells (low entropy),
misaligned ones smear it out (high entropy). Entropy values are only
comparable between runs histogrammed on identical grid bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError
from .geometry import WorldPolyline

GRID_SIZE_DEFAULT = 512
PADDING_DEFAULT = 0.05

_NORM_TOL = 1e-9


@dataclass
class DensityGrid:
    """Normalized 2D histogram over the top view.

    bins[u, v] covers x in [origin_x + u*cell, origin_x + (u+1)*cell) and
    z likewise; cell_size is one square cell edge in meters.
    """

    bins: np.ndarray
    origin: np.ndarray
    cell_size: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=float)
        if bins.ndim != 2 or bins.size < 4:
            raise ValueError(f"bins must be 2D with U*V >= 4, got {bins.shape}")
        if not (self.cell_size > 0.0):
            raise ValueError("cell_size must be positive")
        self.bins = bins
        self.origin = np.asarray(self.origin, dtype=float)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bins.shape

    @property
    def normalized(self) -> bool:
        return abs(float(self.bins.sum()) - 1.0) <= _NORM_TOL


def data_bounds(polylines: list[WorldPolyline]):
    """(xmin, xmax, zmin, zmax) over all polyline points, unpadded."""
    if not polylines:
        raise ValueError("need at least one polyline")
    pts = np.concatenate([p.points for p in polylines], axis=0)
    return (float(pts[:, 0].min()), float(pts[:, 0].max()),
            float(pts[:, 2].min()), float(pts[:, 2].max()))


def union_bounds(*bounds):
    """Union of (xmin, xmax, zmin, zmax) tuples, for comparable entropies."""
    b = np.asarray(bounds, dtype=float)
    return (float(b[:, 0].min()), float(b[:, 1].max()),
            float(b[:, 2].min()), float(b[:, 3].max()))


def density_map(polylines: list[WorldPolyline], U: int = GRID_SIZE_DEFAULT,
                V: int = GRID_SIZE_DEFAULT, padding: float = PADDING_DEFAULT,
                bounds=None) -> DensityGrid:
    """Histogram all polyline points (x, z) on a U x V grid, normalized to 1.

    The grid covers the data bounding box (or explicit `bounds`) expanded by
    `padding` on each side, with square cells sized to the larger padded
    span and centered on the box. Floor and ceiling polylines both
    contribute; restrict the input list for floor-only maps. A degenerate
    (single-point) extent collapses into one occupied cell.
    """
    if U < 2 or V < 2:
        raise ValueError("grid must be at least 2x2")
    if not polylines:
        raise ValueError("need at least one polyline")
    pts = np.concatenate([p.points for p in polylines], axis=0)
    x, z = pts[:, 0], pts[:, 2]
    if bounds is None:
        bounds = data_bounds(polylines)
    xmin, xmax, zmin, zmax = bounds
    span_x = (xmax - xmin) * (1.0 + 2.0 * padding)
    span_z = (zmax - zmin) * (1.0 + 2.0 * padding)
    cell = max(span_x / U, span_z / V)
    if cell <= 0.0:
        cell = 1.0
    ox = 0.5 * (xmin + xmax) - 0.5 * U * cell
    oz = 0.5 * (zmin + zmax) - 0.5 * V * cell
    # Points exactly on the far grid edge belong to the last cell.
    inside = (x >= ox) & (x <= ox + U * cell) & (z >= oz) & (z <= oz + V * cell)
    iu = np.minimum(np.floor((x - ox) / cell).astype(np.int64), U - 1)
    iv = np.minimum(np.floor((z - oz) / cell).astype(np.int64), V - 1)
    counts = np.zeros((U, V), dtype=np.int64)
    np.add.at(counts, (iu[inside], iv[inside]), 1)
    total = int(counts.sum())
    bins = counts / total if total > 0 else counts.astype(float)
    return DensityGrid(bins, np.array([ox, oz]), cell)


def mlc_entropy(grid: DensityGrid) -> float:
    """Entropy (nats) of the normalized density grid, with 0*ln(0) := 0."""
    if not grid.normalized:
        raise MetricError("density grid is not normalized")
    phi = grid.bins[grid.bins > 0.0]
    return float(np.sum(-phi * np.log(phi)))


def render_density(grid: DensityGrid, path) -> None:
    """Write the grid as an 8-bit binary PGM (P5), scaled to the peak cell.

    Image rows are the V axis (z), columns the U axis (x); identical grids
    produce byte-identical files.
    """
    if not grid.normalized:
        raise MetricError("density grid is not normalized")
    peak = float(grid.bins.max())
    img = np.floor(255.0 * grid.bins / peak + 0.5).astype(np.uint8)
    U, V = grid.shape
    header = f"P5\n{U} {V}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(img.T.tobytes(order="C"))


def occupied_cells(grid: DensityGrid) -> np.ndarray:
    """(k, 3) array of (u, v, phi) rows for cells with positive mass."""
    u, v = np.nonzero(grid.bins > 0.0)
    return np.stack([u.astype(float), v.astype(float), grid.bins[u, v]], axis=1)
