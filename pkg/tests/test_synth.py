import math

import numpy as np
import pytest

from panolayout.errors import GeometryError
from panolayout.geometry import BoundaryKind, CameraPose, boundary_to_world, \
    ceiling_height, column_longitudes
from panolayout.pseudolabel import fuse
from panolayout.reprojection import build_stack
from panolayout.synth import NoiseSpec, RoomSpec, exact_boundary, generate_scene, \
    kernel_clearance, lshape_room, ngon_room, perturb, ray_distances, \
    square_room

from conftest import dist_to_polygon_boundary


class TestRoomSpec:
    def test_factories_are_valid(self):
        for room in (square_room(4.0), lshape_room(4.0), ngon_room(6, 2.0),
                     ngon_room(64, 2.0)):
            assert room.footprint.shape[1] == 2

    def test_clockwise_rejected(self):
        with pytest.raises(ValueError):
            RoomSpec(np.array([[0, 0], [0, 1], [1, 1], [1, 0]]), 1.6, 0.9)

    def test_self_intersection_rejected(self):
        bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]])
        with pytest.raises(ValueError):
            RoomSpec(bowtie, 1.6, 0.9)

    def test_bad_heights_rejected(self):
        with pytest.raises(ValueError):
            square_room(4.0, h_floor=0.0)


class TestExactBoundary:
    def test_ngon64_center_nearly_constant(self):
        room = ngon_room(64, 2.0, h_floor=1.6)
        pose = CameraPose(np.eye(3), np.zeros(3), 1.6, 0.9)
        b = exact_boundary(room, pose, 128, BoundaryKind.FLOOR)
        assert np.max(np.abs(b.lat - (-math.atan2(1.6, 2.0)))) < 1e-3

    def test_square_corner_ray(self):
        # W=12 puts column 7 exactly at longitude pi/4, aimed at the corner.
        room = square_room(4.0, h_floor=1.6)
        pose = CameraPose(np.eye(3), np.zeros(3), 1.6, 0.9)
        b = exact_boundary(room, pose, 12, BoundaryKind.FLOOR)
        assert column_longitudes(12)[7] == pytest.approx(math.pi / 4, abs=1e-15)
        assert b.lat[7] == pytest.approx(-math.atan(1.6 / (2 * math.sqrt(2))),
                                         abs=1e-12)

    def test_boundary_lands_on_walls(self):
        # Self-consistency oracle for several rooms and offsets.
        rooms = [square_room(4.0), ngon_room(5, 2.0), ngon_room(9, 1.5),
                 lshape_room(4.0)]
        for room in rooms:
            scene = generate_scene(room, 3, 128, seed=17)
            for f in scene.frames:
                poly = boundary_to_world(f.boundary_floor, f.pose)
                d = dist_to_polygon_boundary(poly.points[:, [0, 2]],
                                             room.footprint)
                assert d.max() < 1e-9

    def test_ceiling_height_recovery(self):
        room = square_room(4.0, h_floor=1.6, h_ceil=1.2)
        scene = generate_scene(room, 4, 128, seed=3)
        for f in scene.frames:
            h = ceiling_height(f.boundary_floor, f.boundary_ceiling, 1.6)
            assert h == pytest.approx(1.2, abs=1e-9)

    def test_ray_misses_outside_origin(self):
        room = square_room(4.0)
        with pytest.raises(GeometryError):
            ray_distances(room.footprint, (10.0, 0.0), np.array([0.0]))


class TestGenerateScene:
    def test_deterministic(self):
        a = generate_scene(square_room(4.0), 4, 64, seed=5)
        b = generate_scene(square_room(4.0), 4, 64, seed=5)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.boundary_floor.lat, fb.boundary_floor.lat)
            assert np.array_equal(fa.pose.rotation, fb.pose.rotation)
            assert np.array_equal(fa.pose.translation, fb.pose.translation)
        c = generate_scene(square_room(4.0), 4, 64, seed=6)
        assert not np.array_equal(a.frames[0].pose.translation,
                                  c.frames[0].pose.translation)

    def test_cameras_in_kernel_with_clearance(self):
        room = lshape_room(4.0)
        scene = generate_scene(room, 8, 64, seed=2)
        for f in scene.frames:
            p = (f.pose.translation[0], f.pose.translation[2])
            assert kernel_clearance(room.footprint, p) >= 0.2

    def test_convex_room_all_columns_defined(self):
        scene = generate_scene(ngon_room(7, 2.0), 5, 256, seed=4)
        for f in scene.frames:
            assert np.all(np.isfinite(f.boundary_floor.lat))
            assert np.all(f.boundary_floor.lat < 0)

    def test_too_small_room_fails_placement(self):
        tiny = square_room(0.3)
        with pytest.raises(GeometryError):
            generate_scene(tiny, 1, 64, seed=0)

    def test_metadata_records_rng(self):
        scene = generate_scene(square_room(4.0), 2, 64, seed=9)
        assert scene.meta["rng"] == "numpy-pcg64-seedsequence"
        assert scene.meta["seed"] == 9


class TestPerturb:
    def test_zero_noise_is_identity(self):
        scene = generate_scene(square_room(4.0), 3, 64, seed=1)
        out = perturb(scene, NoiseSpec(seed=7))
        for f0, f1 in zip(scene.frames, out.frames):
            assert np.array_equal(f0.boundary_floor.lat, f1.boundary_floor.lat)
            assert np.array_equal(f0.boundary_ceiling.lat, f1.boundary_ceiling.lat)
            assert np.array_equal(f0.pose.rotation, f1.pose.rotation)
            assert np.array_equal(f0.pose.translation, f1.pose.translation)

    def test_deterministic_given_seed(self):
        scene = generate_scene(square_room(4.0), 3, 64, seed=1)
        spec = NoiseSpec(boundary_std=0.02, pose_trans_std=0.05, seed=11)
        a = perturb(scene, spec)
        b = perturb(scene, spec)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.boundary_floor.lat, fb.boundary_floor.lat)
            assert np.array_equal(fa.pose.translation, fb.pose.translation)

    def test_outlier_columns_redrawn(self):
        scene = generate_scene(square_room(4.0), 1, 512, seed=2)
        out = perturb(scene, NoiseSpec(outlier_rate=0.3, outlier_std=0.3, seed=3))
        delta = np.abs(out.frames[0].boundary_floor.lat
                       - scene.frames[0].boundary_floor.lat)
        frac_moved = np.mean(delta > 1e-12)
        assert 0.2 < frac_moved < 0.4

    def test_pose_noise_moves_horizontally(self):
        scene = generate_scene(square_room(4.0), 3, 64, seed=1)
        out = perturb(scene, NoiseSpec(pose_trans_std=0.1, pose_rot_std=0.05,
                                       seed=13))
        for f0, f1 in zip(scene.frames, out.frames):
            assert f0.pose.translation[1] == f1.pose.translation[1]
            assert not np.array_equal(f0.pose.translation, f1.pose.translation)
            assert not np.array_equal(f0.pose.rotation, f1.pose.rotation)
            # still a pure yaw rotation: the Y row/column stay untouched
            assert np.allclose(f1.pose.rotation[1], [0, 1, 0], atol=1e-15)

    def test_error_grows_with_boundary_noise(self):
        # Monte-Carlo: pseudo-label error vs noise level, 10 seeds each.
        room = square_room(4.0)

        def label_err(level, seed):
            clean = generate_scene(room, 5, 128, seed=seed)
            noisy = perturb(clean, NoiseSpec(boundary_std=level, seed=seed + 77))
            target = noisy.view_ids[0]
            label = fuse(build_stack(noisy, target, BoundaryKind.FLOOR))
            truth = clean.ground_truth[target][BoundaryKind.FLOOR].lat
            return float(np.mean(np.abs(label.lat_bar - truth)))

        means = [np.mean([label_err(lv, s) for s in range(10)])
                 for lv in (0.01, 0.02, 0.05)]
        assert means[0] < means[1] < means[2]

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(outlier_rate=1.0)
        with pytest.raises(ValueError):
            NoiseSpec(boundary_std=-0.1)
