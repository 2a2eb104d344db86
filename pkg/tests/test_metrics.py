import math

import numpy as np
import pytest

from handmap.errors import (DegenerateTriangle, EmptyInput, EmptyMesh,
                            NonPositiveDuration)
from handmap.hand_model import FingerId, HandState, TriangleMesh
from handmap.metrics import (ContactSurface, TimingStats, measure_frames,
                             min_distance_to_mesh, model_contact_surfaces,
                             point_triangle_distance, poisson_disk_radius,
                             poisson_sample, robot_contact_surfaces,
                             surface_distance, timing_stats)
from handmap.se3 import Transform

UNIT_SQUARE = TriangleMesh(
    np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]),
    np.array([[0, 1, 2], [0, 2, 3]]))


def dense_sampling_oracle(p, tri, n=1_000_000):
    """Min distance to ~n points covering the triangle, independent path."""
    m = int(math.isqrt(n))
    u = np.linspace(0.0, 1.0, m)
    uu, vv = np.meshgrid(u, u)
    mask = uu + vv <= 1.0
    w0 = 1.0 - uu[mask] - vv[mask]
    points = (w0[:, None] * tri[0] + uu[mask][:, None] * tri[1]
              + vv[mask][:, None] * tri[2])
    return float(np.min(np.linalg.norm(points - p, axis=1)))


class TestPointTriangleDistance:
    def test_face_region(self):
        tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert point_triangle_distance([0.0, 0.0, 1.0], tri) == pytest.approx(1.0)

    def test_vertex_region(self):
        tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert point_triangle_distance([2.0, 0.0, 0.0], tri) == pytest.approx(1.0)

    def test_edge_region(self):
        tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert point_triangle_distance([0.5, -1.0, 0.0], tri) == pytest.approx(1.0)

    def test_matches_dense_sampling_oracle(self, rng):
        # Domain-scale triangles (edges up to ~0.17 m) keep the oracle's own
        # grid error (~edge/1000) below the comparison tolerance.
        for _ in range(300):
            tri = rng.uniform(0.0, 0.1, (3, 3))
            if 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) < 1e-6:
                continue
            p = rng.uniform(-0.1, 0.2, 3)
            fast = point_triangle_distance(p, tri)
            dense = dense_sampling_oracle(p, tri, n=250_000)
            assert abs(fast - dense) < 2e-4

    def test_symmetric_under_vertex_permutation(self, rng):
        tri = rng.uniform(0.0, 0.1, (3, 3))
        p = rng.uniform(-0.1, 0.2, 3)
        reference = point_triangle_distance(p, tri)
        for perm in ((1, 2, 0), (2, 0, 1), (0, 2, 1), (1, 0, 2), (2, 1, 0)):
            assert point_triangle_distance(p, tri[list(perm)]) == pytest.approx(
                reference, abs=1e-12)

    def test_degenerate_triangle(self):
        tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        with pytest.raises(DegenerateTriangle):
            point_triangle_distance([0.0, 0.0, 1.0], tri)


class TestPoissonSample:
    def test_single_point_on_mesh(self):
        points = poisson_sample(UNIT_SQUARE, 1, seed=0)
        assert points.shape == (1, 3)
        assert min_distance_to_mesh(points, UNIT_SQUARE)[0] < 1e-9

    def test_determinism(self):
        a = poisson_sample(UNIT_SQUARE, 50, seed=7)
        b = poisson_sample(UNIT_SQUARE, 50, seed=7)
        assert np.array_equal(a, b)
        c = poisson_sample(UNIT_SQUARE, 50, seed=8)
        assert not np.array_equal(a, c)

    def test_min_pairwise_distance(self):
        n = 100
        r_max = poisson_disk_radius(1.0, n)
        for seed in range(20):
            points = poisson_sample(UNIT_SQUARE, n, seed=seed)
            assert len(points) == n
            d = np.linalg.norm(points[:, None] - points[None, :], axis=2)
            np.fill_diagonal(d, np.inf)
            assert d.min() >= 0.5 * r_max

    def test_all_samples_on_mesh(self, record_config):
        from handmap.hand_model import finger_surface_mesh
        mesh = finger_surface_mesh(record_config.shape, FingerId.index,
                                   np.full(9, 0.3), segments_per_capsule=12)
        points = poisson_sample(mesh, 60, seed=3)
        assert np.max(min_distance_to_mesh(points, mesh)) < 1e-9

    def test_empty_mesh(self):
        with pytest.raises(EmptyMesh):
            poisson_sample(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)),
                           5, seed=0)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            poisson_sample(UNIT_SQUARE, 0, seed=0)


def square_at_height(z):
    return TriangleMesh(
        np.array([[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]]),
        np.array([[0, 1, 2], [0, 2, 3]]))


class TestSurfaceDistance:
    def test_identical_surfaces(self):
        surface = ContactSurface(mesh=UNIT_SQUARE, finger=FingerId.index)
        assert surface_distance(surface, surface, n=80, seed=0) < 1e-9

    def test_parallel_planes(self):
        a = ContactSurface(mesh=square_at_height(0.0), finger=FingerId.index)
        b = ContactSurface(mesh=square_at_height(0.01), finger=FingerId.index)
        assert surface_distance(a, b, n=100, seed=0) == pytest.approx(0.01, abs=1e-6)

    def test_far_field_limit(self):
        offset = 50.0
        far = TriangleMesh(square_at_height(0.0).vertices + np.array([0, 0, offset]),
                           square_at_height(0.0).triangles.copy())
        a = ContactSurface(mesh=square_at_height(0.0), finger=FingerId.index)
        b = ContactSurface(mesh=far, finger=FingerId.index)
        value = surface_distance(a, b, n=100, seed=1)
        assert abs(value - offset) / offset < 0.05

    def test_translation_consistency(self, rng):
        shift = rng.uniform(-5, 5, 3)
        a1 = ContactSurface(mesh=UNIT_SQUARE, finger=FingerId.index)
        b1 = ContactSurface(mesh=square_at_height(0.02), finger=FingerId.index)
        moved_a = ContactSurface(
            mesh=TriangleMesh(UNIT_SQUARE.vertices + shift,
                              UNIT_SQUARE.triangles.copy()),
            finger=FingerId.index)
        moved_b = ContactSurface(
            mesh=TriangleMesh(square_at_height(0.02).vertices + shift,
                              square_at_height(0.02).triangles.copy()),
            finger=FingerId.index)
        d1 = surface_distance(a1, b1, n=60, seed=5)
        d2 = surface_distance(moved_a, moved_b, n=60, seed=5)
        assert abs(d1 - d2) < 1e-12

    def test_empty_surface_rejected(self):
        with pytest.raises(EmptyMesh):
            ContactSurface(mesh=TriangleMesh(np.zeros((0, 3)),
                                             np.zeros((0, 3), dtype=int)),
                           finger=FingerId.index)


class TestContactSurfaces:
    def test_model_surfaces_cover_all_fingers(self, record_config):
        state = HandState(pose=Transform.identity(),
                          finger_q=np.full((5, 9), 0.2))
        surfaces = model_contact_surfaces(record_config.shape, state, segments=12)
        assert set(surfaces) == set(FingerId)
        for surface in surfaces.values():
            assert len(surface.mesh.triangles) > 0

    def test_robot_surfaces_for_shipped_hands(self, mia_config, shadow_config,
                                              robotiq_config):
        for config in (mia_config, shadow_config, robotiq_config):
            actuated = {n: 0.1 for n in config.hand.actuated}
            surfaces = robot_contact_surfaces(config.hand, actuated, segments=12)
            assert set(surfaces) == set(config.hand.contact_capsules)

    def test_selfclone_surfaces_match_model(self, clone_config, record_config, rng):
        # The cloned hand's contact capsules posed at the model's own angles
        # coincide with the model's contact surface.
        q = rng.uniform(record_config.q_min, record_config.q_max)
        state = HandState(pose=Transform.identity(), finger_q=q)
        model_surfaces = model_contact_surfaces(record_config.shape, state,
                                                segments=12)
        actuated = {}
        for finger in FingerId:
            for name, value in zip(clone_config.hand.finger_commands(finger),
                                   q[finger - 1]):
                actuated[name] = float(value)
        robot_surfaces = robot_contact_surfaces(clone_config.hand, actuated,
                                                segments=12)
        for finger in FingerId:
            d = surface_distance(robot_surfaces[finger], model_surfaces[finger],
                                 n=40, seed=2)
            assert d < 1e-9


class TestTimingStats:
    def test_two_durations(self):
        stats = timing_stats([0.005, 0.010])
        assert stats.mean_hz == pytest.approx(150.0)
        assert stats.min_hz == pytest.approx(100.0)
        assert stats.frames == 2

    def test_uniform(self):
        stats = timing_stats([0.01] * 100)
        assert stats.mean_hz == pytest.approx(stats.min_hz) == pytest.approx(100.0)

    def test_outlier_dominates_min(self):
        durations = [0.01] * 10 + [1.0]
        stats = timing_stats(durations)
        assert stats.min_hz == pytest.approx(1.0)
        assert stats.mean_hz > 90.0

    def test_errors(self):
        with pytest.raises(EmptyInput):
            timing_stats([])
        with pytest.raises(NonPositiveDuration):
            timing_stats([0.01, 0.0])

    def test_invariant_enforced(self):
        with pytest.raises(ValueError):
            TimingStats(frames=1, mean_hz=10.0, min_hz=20.0)
        with pytest.raises(ValueError):
            TimingStats(frames=0, mean_hz=10.0, min_hz=10.0)

    def test_measure_frames(self):
        results, durations = measure_frames(lambda x: x * 2, [1, 2, 3])
        assert results == [2, 4, 6]
        assert len(durations) == 3
        assert all(d > 0 for d in durations)
