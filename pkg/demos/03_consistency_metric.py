#!/usr/bin/env python3
"""The top-view density map and its entropy as a no-ground-truth metric.

Projects all boundaries of a scene into a shared 2D histogram, renders it
as a PGM image, and sweeps boundary noise to show that entropy orders
models by geometric consistency (lower = more consistent).
"""

from pathlib import Path

import numpy as np

from panolayout import NoiseSpec, data_bounds, density_map, generate_scene, \
    mlc_entropy, perturb, render_density, square_room, union_bounds

SEED = 11
OUT_DIR = Path("demo_out")


def main():
    OUT_DIR.mkdir(exist_ok=True)
    base = generate_scene(square_room(4.0), 8, 512, seed=SEED)

    # Levels are kept well below the smallest |latitude| in the scene: noise
    # that pushes a column to the horizon clamp maps to a near-infinite
    # radius and would blow up the shared bounding box.
    levels = [0.0, 0.005, 0.01, 0.02, 0.05]
    scenes = {lv: base if lv == 0.0 else
              perturb(base, NoiseSpec(boundary_std=lv, seed=SEED + 1))
              for lv in levels}

    # One shared grid: entropies are only comparable on identical bounds.
    bounds = union_bounds(*[data_bounds(s.world_polylines())
                            for s in scenes.values()])

    print("== entropy vs boundary noise (shared 512x512 grid) ==")
    print("  noise std (rad) | occupied cells | entropy (nats)")
    for lv in levels:
        grid = density_map(scenes[lv].world_polylines(), 512, 512, bounds=bounds)
        h = mlc_entropy(grid)
        occupied = int(np.sum(grid.bins > 0))
        print(f"  {lv:15.3f} | {occupied:14d} | {h:.4f}")

    for lv, name in [(0.0, "clean"), (0.05, "noisy")]:
        grid = density_map(scenes[lv].world_polylines(), 512, 512, bounds=bounds)
        path = OUT_DIR / f"density_{name}.pgm"
        render_density(grid, path)
        print(f"wrote {path} (H = {mlc_entropy(grid):.4f})")
    print("open the PGMs side by side: the clean scene is a crisp wall ring,"
          " the noisy one a smeared cloud")


if __name__ == "__main__":
    main()
