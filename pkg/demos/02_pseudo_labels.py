#!/usr/bin/env python3
"""Cross-view pseudo-labels and the uncertainty-weighted consistency loss.

Builds a noisy multi-view scene, re-projects every view into one target,
fuses the stack into a pseudo-label, and compares median against mean
fusion when some views are badly corrupted.
"""

import numpy as np

from panolayout import NoiseSpec, build_stack, fuse, generate_scene, l1_loss, \
    perturb, square_room, wbc_loss
from panolayout.geometry import BoundaryKind, SphericalBoundary

SEED = 7


def label_error(scene, truth, target, estimator):
    stack = build_stack(scene, target, BoundaryKind.FLOOR)
    label = fuse(stack, estimator=estimator)
    gt = truth.ground_truth[target][BoundaryKind.FLOOR].lat
    return label, float(np.mean(np.abs(label.lat_bar - gt)))


def main():
    clean = generate_scene(square_room(4.0), 9, 256, seed=SEED)
    noisy = perturb(clean, NoiseSpec(boundary_std=0.03, seed=SEED + 1))
    target = noisy.view_ids[0]

    print(f"== fusing {len(noisy.frames)} noisy views into target {target!r} ==")
    stack = build_stack(noisy, target, BoundaryKind.FLOOR)
    print(f"  stack shape {stack.lat.shape},"
          f" {stack.valid.mean():.0%} of entries valid")
    label, err = label_error(noisy, clean, target, "median")
    print(f"  median pseudo-label error vs truth: {err:.4f} rad")
    print(f"  sigma range: [{label.sigma.min():.4f}, {label.sigma.max():.4f}] rad")

    truth = clean.ground_truth[target][BoundaryKind.FLOOR]
    pred = noisy.frame(target).boundary_floor
    print("\n== losses of the target's own noisy prediction ==")
    print(f"  weighted consistency loss: {wbc_loss(pred, label):10.2f}")
    print(f"  plain L1 loss:             {l1_loss(pred, label):10.4f}")
    print(f"  (truth scores {wbc_loss(truth, label):.2f} /"
          f" {l1_loss(truth, label):.4f})")

    print("\n== median vs mean under outlier views ==")
    rng = np.random.default_rng(SEED + 2)
    frames = {}
    for i, f in enumerate(clean.frames):
        std = 0.3 if i < 2 else 0.01  # two badly corrupted views
        lat = np.clip(f.boundary_floor.lat
                      + rng.normal(0.0, std, clean.image_width), -1.5, -1e-4)
        frames[f.view_id] = {BoundaryKind.FLOOR:
                             SphericalBoundary(lat, BoundaryKind.FLOOR)}
    corrupted = clean.with_boundaries(frames)
    for estimator in ("median", "mean"):
        _, err = label_error(corrupted, clean, target, estimator)
        print(f"  {estimator:>6s} fusion error: {err:.4f} rad")
    print("  the median shrugs off the two outlier views; the mean cannot")


if __name__ == "__main__":
    main()
