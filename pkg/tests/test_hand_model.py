import math

import numpy as np
import pytest

from handmap.hand_model import (FINGERS, JOINTS_PER_FINGER,
                                STATE_PARAMETER_COUNT, FingerId, HandShape,
                                HandState, TriangleMesh, capsule_mesh,
                                check_state_bounds, finger_forward_kinematics,
                                finger_surface_mesh, hand_markers)
from handmap.se3 import (REVOLUTE, Joint, KinematicTree, Transform,
                         forward_kinematics, matrix_from_quat)


def shape_of(config):
    return config.shape


class TestFingerKinematics:
    def test_zero_pose_is_straight(self, record_config):
        shape = shape_of(record_config)
        for finger in FINGERS:
            resolved = shape.resolved(finger)
            p1, p2 = finger_forward_kinematics(shape, finger, np.zeros(9))
            axis = resolved.base_rotation[:, 1]
            tip_marker = resolved.markers[1]
            along = sum(resolved.lengths[:tip_marker.segment]) + tip_marker.offset[1]
            lateral = (resolved.base_rotation[:, 0] * tip_marker.offset[0]
                       + resolved.base_rotation[:, 2] * tip_marker.offset[2])
            expected = resolved.base_position + along * axis + lateral
            assert np.allclose(p2, expected, atol=1e-12)

    def test_base_flexion_preserves_distance_from_base(self, record_config):
        shape = shape_of(record_config)
        for finger in FINGERS:
            resolved = shape.resolved(finger)
            q = np.zeros(9)
            _, p2_straight = finger_forward_kinematics(shape, finger, q)
            q[0] = math.pi / 2
            _, p2_flexed = finger_forward_kinematics(shape, finger, q)
            d_straight = np.linalg.norm(p2_straight - resolved.base_position)
            d_flexed = np.linalg.norm(p2_flexed - resolved.base_position)
            assert d_flexed == pytest.approx(d_straight, abs=1e-12)
            assert not np.allclose(p2_straight, p2_flexed)

    def explicit_finger_tree(self, resolved, markers):
        """Equivalent 9-joint kinematic tree built through the generic API."""
        links = ["palm"]
        joints = []
        parent = "palm"
        axes = [(1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)]
        for s in range(3):
            if s == 0:
                origin = Transform(resolved.base_rotation, resolved.base_position)
            else:
                origin = Transform.from_translation([0.0, resolved.lengths[s - 1], 0.0])
            for k in range(3):
                child = f"s{s}k{k}"
                links.append(child)
                joints.append(Joint(
                    name=f"q{3 * s + k}", parent=parent, child=child,
                    origin=origin if k == 0 else Transform.identity(),
                    kind=REVOLUTE, axis=np.array(axes[k])))
                parent = child
        return KinematicTree(links, joints)

    def test_matches_generic_tree_oracle(self, record_config, rng):
        shape = shape_of(record_config)
        for finger in (FingerId.thumb, FingerId.middle, FingerId.little):
            resolved = shape.resolved(finger)
            tree = self.explicit_finger_tree(resolved, resolved.markers)
            for _ in range(10):
                i = finger - 1
                q = rng.uniform(record_config.q_min[i], record_config.q_max[i])
                p1, p2 = finger_forward_kinematics(shape, finger, q)
                poses = forward_kinematics(tree, {f"q{k}": q[k] for k in range(9)})
                for point, marker in zip((p1, p2), resolved.markers):
                    link = f"s{marker.segment}k2"
                    expected = poses[link].apply(marker.offset)
                    assert np.allclose(point, expected, atol=1e-12)

    def test_continuity_lipschitz(self, record_config, rng):
        shape = shape_of(record_config)
        finger = FingerId.middle
        resolved = shape.resolved(finger)
        bound = resolved.total_length + max(np.linalg.norm(m.offset)
                                            for m in resolved.markers)
        i = finger - 1
        for _ in range(20):
            q = rng.uniform(record_config.q_min[i], record_config.q_max[i])
            p1, p2 = finger_forward_kinematics(shape, finger, q)
            k = int(rng.integers(0, 9))
            eps = 1e-6
            q2 = q.copy()
            q2[k] += eps
            p1b, p2b = finger_forward_kinematics(shape, finger, q2)
            assert np.linalg.norm(p1b - p1) <= bound * eps * (1 + 1e-6)
            assert np.linalg.norm(p2b - p2) <= bound * eps * (1 + 1e-6)

    def test_mid_marker_attached_upstream_of_tip_marker(self, record_config):
        # Chain ordering: the mid marker's segment strictly precedes the
        # tip marker's segment for every finger.
        shape = shape_of(record_config)
        for finger in FINGERS:
            mid, tip = shape.resolved(finger).markers
            assert mid.segment < tip.segment

    def test_mid_marker_stays_inside_tip_marker_at_moderate_curl(
            self, record_config, rng):
        # The Euclidean form of the ordering holds until the finger curls
        # far enough that the tip approaches the base again; limit total
        # flexion to stay in the monotone regime.
        shape = shape_of(record_config)
        for _ in range(100):
            finger = FingerId(int(rng.integers(1, 6)))
            i = finger - 1
            resolved = shape.resolved(finger)
            q = rng.uniform(record_config.q_min[i], record_config.q_max[i])
            q[0::3] = np.minimum(q[0::3], 0.7)
            p1, p2 = finger_forward_kinematics(shape, finger, q)
            base = resolved.base_position
            assert np.linalg.norm(p1 - base) <= np.linalg.norm(p2 - base)

    def test_wrong_joint_count_rejected(self, record_config):
        with pytest.raises(ValueError):
            finger_forward_kinematics(shape_of(record_config), FingerId.index,
                                      np.zeros(5))


class TestHandMarkers:
    def test_identity_pose_matches_base_frame(self, record_config):
        shape = shape_of(record_config)
        state = HandState(pose=Transform.identity(),
                          finger_q=np.zeros((5, 9)))
        points = hand_markers(shape, state)
        for finger in FINGERS:
            p1, p2 = finger_forward_kinematics(shape, finger, np.zeros(9))
            assert np.allclose(points[finger - 1, 0], p1, atol=1e-12)
            assert np.allclose(points[finger - 1, 1], p2, atol=1e-12)

    def test_translation_shifts_all_points(self, record_config):
        shape = shape_of(record_config)
        t = np.array([0.3, -0.2, 0.7])
        base = HandState(pose=Transform.identity(), finger_q=np.zeros((5, 9)))
        moved = HandState(pose=Transform.from_translation(t),
                          finger_q=np.zeros((5, 9)))
        assert np.allclose(hand_markers(shape, moved),
                           hand_markers(shape, base) + t, atol=1e-12)

    def test_rotation_preserves_pairwise_distances(self, record_config, rng):
        shape = shape_of(record_config)
        q = rng.uniform(record_config.q_min, record_config.q_max)
        quat = rng.normal(size=4)
        rot = Transform(matrix_from_quat(quat / np.linalg.norm(quat)), np.zeros(3))
        flat_a = hand_markers(shape, HandState(pose=Transform.identity(),
                                               finger_q=q)).reshape(-1, 3)
        flat_b = hand_markers(shape, HandState(pose=rot, finger_q=q)).reshape(-1, 3)
        d_a = np.linalg.norm(flat_a[:, None] - flat_a[None, :], axis=2)
        d_b = np.linalg.norm(flat_b[:, None] - flat_b[None, :], axis=2)
        assert np.allclose(d_a, d_b, atol=1e-12)


class TestShape:
    def test_beta_zero_is_mean_hand(self, record_config):
        shape = shape_of(record_config)
        for finger in FINGERS:
            basis = shape.shape_basis[finger]
            resolved = shape.resolved(finger)
            assert np.allclose(resolved.lengths, basis.lengths)
            assert np.allclose(resolved.radii, basis.radii)

    def test_resolved_dimensions_affine_in_beta(self, record_config, rng):
        shape = shape_of(record_config)
        for _ in range(20):
            beta = rng.uniform(-3, 3, 10)
            resolved = shape.with_beta(beta).resolved(FingerId.index)
            basis = shape.shape_basis[FingerId.index]
            assert np.allclose(resolved.lengths,
                               basis.lengths + basis.lengths_coeff @ beta,
                               atol=1e-15)
            assert np.allclose(resolved.radii,
                               basis.radii + basis.radii_coeff @ beta,
                               atol=1e-15)
            assert np.allclose(resolved.base_position,
                               basis.base_position + basis.base_position_coeff @ beta,
                               atol=1e-15)

    def test_dimensions_positive_over_shape_box(self, record_config, rng):
        shape = shape_of(record_config)
        for _ in range(50):
            beta = rng.uniform(-3, 3, 10)
            varied = shape.with_beta(beta)
            for finger in FINGERS:
                resolved = varied.resolved(finger)
                assert np.all(resolved.lengths > 0)
                assert np.all(resolved.radii > 0)

    def test_state_parameter_count(self):
        assert STATE_PARAMETER_COUNT == 48

    def test_state_bounds_check(self, record_config):
        good = HandState(pose=Transform.identity(), finger_q=np.zeros((5, 9)))
        check_state_bounds(good, record_config.q_min, record_config.q_max)
        bad_q = np.zeros((5, 9))
        bad_q[0, 0] = 99.0
        bad = HandState(pose=Transform.identity(), finger_q=bad_q)
        with pytest.raises(ValueError):
            check_state_bounds(bad, record_config.q_min, record_config.q_max)


def mesh_area(mesh: TriangleMesh) -> float:
    return mesh.area()


class TestCapsuleMesh:
    def test_bounding_box_length(self):
        length, radius = 0.05, 0.01
        mesh = capsule_mesh([0, 0, 0], [0, length, 0], radius, segments=16)
        extent = mesh.vertices[:, 1].max() - mesh.vertices[:, 1].min()
        assert extent == pytest.approx(length + 2 * radius, abs=1e-9)

    def test_cross_section_scales_with_radius(self):
        small = capsule_mesh([0, 0, 0], [0, 0.03, 0], 0.008, segments=16)
        large = capsule_mesh([0, 0, 0], [0, 0.03, 0], 0.016, segments=16)
        small_extent = small.vertices[:, 0].max() - small.vertices[:, 0].min()
        large_extent = large.vertices[:, 0].max() - large.vertices[:, 0].min()
        assert large_extent == pytest.approx(2 * small_extent, rel=1e-9)

    def test_surface_area_formula(self):
        # Analytic capsule area: 2 pi r L + 4 pi r^2.
        length, radius = 0.03, 0.008
        mesh = capsule_mesh([0, 0, 0], [0, length, 0], radius, segments=32)
        expected = 2 * math.pi * radius * length + 4 * math.pi * radius ** 2
        assert mesh_area(mesh) == pytest.approx(expected, rel=0.02)

    def test_watertight(self):
        mesh = capsule_mesh([0, 0, 0], [0.01, 0.04, 0.002], 0.009, segments=12)
        edges = {}
        for tri in mesh.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        assert all(count == 2 for count in edges.values())

    def test_half_capsule_is_open_and_on_requested_side(self):
        full = capsule_mesh([0, 0, 0], [0, 0.03, 0], 0.008, segments=16)
        half = capsule_mesh([0, 0, 0], [0, 0.03, 0], 0.008, segments=16,
                            half_direction=[0, 0, -1])
        assert len(half.triangles) < len(full.triangles)
        assert half.vertices[:, 2].min() < -0.99 * 0.008
        assert half.vertices[:, 2].max() < 1e-9 + 1e-12

    def test_minimum_segments(self):
        with pytest.raises(ValueError):
            capsule_mesh([0, 0, 0], [0, 0.03, 0], 0.008, segments=4)

    def test_finger_surface_mesh(self, record_config):
        shape = shape_of(record_config)
        full = finger_surface_mesh(shape, FingerId.index, np.zeros(9),
                                   segments_per_capsule=16)
        contact = finger_surface_mesh(shape, FingerId.index, np.zeros(9),
                                      segments_per_capsule=16, contact_only=True)
        assert len(full.triangles) > len(contact.triangles) > 0
        resolved = shape.resolved(FingerId.index)
        length = resolved.total_length + 2 * resolved.radii.max()
        extent = np.linalg.norm(full.vertices.max(axis=0) - full.vertices.min(axis=0))
        assert extent < length * 1.2


class TestTriangleMesh:
    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))

    def test_rejects_degenerate_triangles(self):
        vertices = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0.0]])
        with pytest.raises(ValueError):
            TriangleMesh(vertices, np.array([[0, 1, 2]]))

    def test_merge_offsets_indices(self):
        a = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]),
                         np.array([[0, 1, 2]]))
        merged = TriangleMesh.merge([a, a])
        assert len(merged.vertices) == 6
        assert merged.triangles[1].tolist() == [3, 4, 5]

    def test_transform_preserves_area(self, rng):
        a = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]),
                         np.array([[0, 1, 2]]))
        quat = rng.normal(size=4)
        t = Transform(matrix_from_quat(quat / np.linalg.norm(quat)),
                      rng.uniform(-1, 1, 3))
        assert a.transformed(t).area() == pytest.approx(a.area(), abs=1e-12)
