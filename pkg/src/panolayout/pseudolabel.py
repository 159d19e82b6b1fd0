"""Fusing boundary stacks into pseudo-labels and the consistency losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reprojection import BoundaryStack

SIGMA_FLOOR_DEFAULT = 1e-3

ESTIMATORS = ("median", "mean")


@dataclass
class PseudoLabel:
    """Fused per-column boundary with its uncertainty.

    lat_bar: (W,) fused latitude; sigma: (W,) spread, floored at sigma_floor;
    support: (W,) count of valid stack entries used per column.
    """

    lat_bar: np.ndarray
    sigma: np.ndarray
    support: np.ndarray

    @property
    def width(self) -> int:
        return self.lat_bar.shape[0]


def fuse(stack: BoundaryStack, estimator: str = "median",
         sigma_floor: float = SIGMA_FLOOR_DEFAULT) -> PseudoLabel:
    """Per-column median (or mean) and population std over valid entries.

    The lower median is used for even counts, so lat_bar is always one of
    the observed values; sigma is floored at sigma_floor (columns with a
    single valid entry have zero spread, and the floor keeps the weighted
    loss finite).
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    if not (sigma_floor > 0.0):
        raise ValueError("sigma_floor must be positive")
    lat = np.where(stack.valid, stack.lat, np.nan)
    support = stack.valid.sum(axis=1)
    # Reductions run over value-sorted entries (NaNs last), which makes the
    # result exactly invariant to any permutation of the view axis.
    order = np.sort(lat, axis=1)
    if estimator == "median":
        # Lower median: index (n-1)//2 of the sorted valid entries.
        idx = (support - 1) // 2
        lat_bar = np.take_along_axis(order, idx[:, None], axis=1)[:, 0]
    else:
        lat_bar = np.nanmean(order, axis=1)
    mean = np.nanmean(order, axis=1)
    var = np.nanmean((order - mean[:, None]) ** 2, axis=1)
    sigma = np.maximum(np.sqrt(var), sigma_floor)
    return PseudoLabel(lat_bar, sigma, support.astype(np.int64))


def _pred_lat(pred) -> np.ndarray:
    return np.asarray(getattr(pred, "lat", pred), dtype=float)


def wbc_loss(pred, pl: PseudoLabel) -> float:
    """Uncertainty-weighted boundary consistency: sum |diff| / sigma^2."""
    lat = _pred_lat(pred)
    if lat.shape[0] != pl.width:
        raise ValueError(f"length mismatch: pred {lat.shape[0]} vs label {pl.width}")
    return float(np.sum(np.abs(lat - pl.lat_bar) / pl.sigma ** 2))


def l1_loss(pred, pl: PseudoLabel) -> float:
    """Unweighted variant: sum |diff|."""
    lat = _pred_lat(pred)
    if lat.shape[0] != pl.width:
        raise ValueError(f"length mismatch: pred {lat.shape[0]} vs label {pl.width}")
    return float(np.sum(np.abs(lat - pl.lat_bar)))
