#!/usr/bin/env python3
"""Walkthrough of the spherical camera model.

Covers the pixel/angle convention, projecting a boundary onto its height
plane, the exact round trip back to spherical coordinates, and the
ceiling-height relation, all checked against ray-cast wall geometry.
"""

import math

import numpy as np

from panolayout import CameraPose, SphericalBoundary, boundary_to_world, \
    ceiling_height, column_longitudes, pixel_to_spherical, square_room, \
    world_to_boundary_samples
from panolayout.geometry import BoundaryKind
from panolayout.synth import ray_distances


def main():
    print("== pixel/angle convention ==")
    for u, v, W, H in [(0, 0, 4, 2), (2, 1, 4, 2), (511, 255, 512, 256)]:
        lon, lat = pixel_to_spherical(u, v, W, H)
        print(f"  pixel (u={u}, v={v}) of {W}x{H} -> lon={lon:+.6f}, lat={lat:+.6f}")

    print("\n== square room, ray-cast boundary ==")
    room = square_room(4.0, h_floor=1.6, h_ceil=1.1)
    W = 16
    lon = column_longitudes(W)
    d = ray_distances(room.footprint, (0.0, 0.0), lon)
    floor = SphericalBoundary(-np.arctan(room.h_floor / d), BoundaryKind.FLOOR)
    ceil = SphericalBoundary(np.arctan(room.h_ceil / d), BoundaryKind.CEILING)
    pose = CameraPose(np.eye(3), np.zeros(3), room.h_floor, room.h_ceil)
    poly = boundary_to_world(floor, pose)
    print("  column | wall dist (m) | floor lat (rad) | world point (x, y, z)")
    for k in range(0, W, 4):
        x, y, z = poly.points[k]
        print(f"  {k:6d} | {d[k]:13.4f} | {floor.lat[k]:+15.4f} |"
              f" ({x:+.3f}, {y:+.3f}, {z:+.3f})")

    print("\n== round trip ==")
    samples = world_to_boundary_samples(poly, pose)
    err_lon = np.max(np.abs(samples[:, 0] - lon))
    err_lat = np.max(np.abs(samples[:, 1] - floor.lat))
    print(f"  max |lon error| = {err_lon:.2e} rad, max |lat error| = {err_lat:.2e} rad")

    print("\n== ceiling height from the boundary pair ==")
    h_c = ceiling_height(floor, ceil, room.h_floor)
    print(f"  recovered {h_c:.12f} m (true {room.h_ceil} m,"
          f" error {abs(h_c - room.h_ceil):.2e})")

    print("\n== off-center view of the same room ==")
    pose2 = CameraPose.from_yaw(math.pi / 6, (0.8, 0.0, -0.5), room.h_floor)
    d2 = ray_distances(room.footprint, (0.8, -0.5),
                       (lon + math.pi / 6 + math.pi) % (2 * math.pi) - math.pi)
    floor2 = SphericalBoundary(-np.arctan(room.h_floor / d2), BoundaryKind.FLOOR)
    poly2 = boundary_to_world(floor2, pose2)
    spans = np.ptp(poly2.points[:, [0, 2]], axis=0)
    print(f"  boundary latitudes span [{floor2.lat.min():+.3f}, {floor2.lat.max():+.3f}]")
    print(f"  world footprint spans x: {spans[0]:.3f} m, z: {spans[1]:.3f} m"
          f" (room is 4 m x 4 m)")


if __name__ == "__main__":
    main()
