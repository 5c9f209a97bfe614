import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from batontrack.errors import (
    DegenerateMatrix,
    EmptyInput,
    ExcessiveSpread,
    NonUnitQuaternion,
    SingularSystem,
)
from batontrack.geometry import (
    BatonSpec,
    ControlFrame,
    Quaternion,
    average_rotations,
    baton_tip_position,
    left_divide,
    project_to_so3,
    quat_to_rotation,
    relative_rotation,
)


def random_unit_quaternion(rng):
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return Quaternion(*v)


def rodrigues(axis, angle):
    # independent axis-angle oracle: R = I + sin(a) K + (1 - cos(a)) K^2
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class TestQuatToRotation:
    def test_identity(self):
        assert np.allclose(quat_to_rotation(Quaternion(1, 0, 0, 0)), np.eye(3), atol=0)

    def test_90_deg_about_x(self):
        h = math.sqrt(2) / 2
        expected = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
        assert np.allclose(quat_to_rotation(Quaternion(h, h, 0, 0)), expected, atol=1e-15)

    def test_matches_axis_angle_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            q = random_unit_quaternion(rng)
            vec = np.array([q.x, q.y, q.z])
            s = np.linalg.norm(vec)
            if s < 1e-8:
                continue
            angle = 2.0 * math.atan2(s, q.w)
            expected = rodrigues(vec / s, angle)
            assert np.max(np.abs(quat_to_rotation(q) - expected)) < 1e-12

    def test_soft_tolerance_renormalizes(self):
        q = Quaternion(1.0 + 5e-7, 0.0, 0.0, 0.0)
        r = quat_to_rotation(q)
        assert np.allclose(r, np.eye(3), atol=1e-12)

    def test_moderate_deviation_renormalizes(self):
        scale = 1.05
        h = math.sqrt(2) / 2
        r = quat_to_rotation(Quaternion(h * scale, h * scale, 0, 0))
        expected = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
        assert np.allclose(r, expected, atol=1e-12)

    def test_hard_limit_raises(self):
        with pytest.raises(NonUnitQuaternion):
            quat_to_rotation(Quaternion(1.2, 0, 0, 0))


class TestProjectToSO3:
    def test_rotation_is_fixed_point(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            r = quat_to_rotation(random_unit_quaternion(rng))
            assert np.max(np.abs(project_to_so3(r) - r)) < 1e-12

    def test_noisy_rotation_recovered(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            r = quat_to_rotation(random_unit_quaternion(rng))
            noisy = r + rng.uniform(-1e-3, 1e-3, size=(3, 3))
            proj = project_to_so3(noisy)
            assert np.linalg.norm(proj - r) < 5e-3
            assert abs(np.linalg.det(proj) - 1.0) < 1e-9

    def test_reflection_corrected(self):
        m = np.diag([1.0, 1.0, -1.0])
        proj = project_to_so3(m)
        assert abs(np.linalg.det(proj) - 1.0) < 1e-9

    def test_degenerate_raises(self):
        m = np.zeros((3, 3))
        m[0, 0] = 1.0
        with pytest.raises(DegenerateMatrix):
            project_to_so3(m)


class TestLeftDivide:
    def test_identity_left(self):
        rng = np.random.default_rng(4)
        r = quat_to_rotation(random_unit_quaternion(rng))
        assert np.allclose(left_divide(np.eye(3), r), r, atol=0)

    def test_equal_operands_give_identity(self):
        rng = np.random.default_rng(5)
        r = quat_to_rotation(random_unit_quaternion(rng))
        assert np.max(np.abs(left_divide(r, r) - np.eye(3))) < 1e-12

    def test_residual_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = quat_to_rotation(random_unit_quaternion(rng))
            b = quat_to_rotation(random_unit_quaternion(rng))
            x = left_divide(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_vector_right_operand(self):
        rng = np.random.default_rng(7)
        a = quat_to_rotation(random_unit_quaternion(rng))
        v = rng.standard_normal(3)
        x = left_divide(a, v)
        assert x.shape == (3,)
        assert np.linalg.norm(a @ x - v) < 1e-10

    def test_singular_raises(self):
        singular = np.ones((3, 3))
        with pytest.raises(SingularSystem):
            left_divide(singular, np.eye(3))

    def test_consistency_recovers_factor(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            a = quat_to_rotation(random_unit_quaternion(rng))
            x = quat_to_rotation(random_unit_quaternion(rng))
            assert np.max(np.abs(left_divide(a, a @ x) - x)) < 1e-10


class TestAverageRotations:
    def test_identical_samples(self):
        r = rodrigues([0, 1, 0], 0.7)
        avg = average_rotations([r, r, r])
        assert np.max(np.abs(avg - r)) < 1e-12

    def test_coaxial_chordal_mean(self):
        r10 = rodrigues([0, 0, 1], math.radians(10))
        r20 = rodrigues([0, 0, 1], math.radians(20))
        avg = average_rotations([r10, r20])
        expected = rodrigues([0, 0, 1], math.radians(15))
        angle_err = math.acos(np.clip((np.trace(expected.T @ avg) - 1) / 2, -1, 1))
        assert angle_err < 1e-6

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            average_rotations([])

    def test_excessive_spread_raises(self):
        with pytest.raises(ExcessiveSpread):
            average_rotations([np.eye(3), rodrigues([1, 0, 0], math.radians(120))])

    def test_permutation_invariant(self):
        rng = np.random.default_rng(9)
        base = rodrigues([0, 0, 1], 0.3)
        samples = [project_to_so3(base + rng.uniform(-1e-3, 1e-3, (3, 3))) for _ in range(6)]
        a = average_rotations(samples)
        b = average_rotations(samples[::-1])
        assert np.max(np.abs(a - b)) < 1e-12


class TestRelativeRotation:
    def test_equal_inputs_give_identity(self):
        control = ControlFrame(r0=rot_z(math.radians(30)), sample_count=5)
        r = relative_rotation(control.r0, control)
        assert np.max(np.abs(r - np.eye(3))) < 1e-12

    def test_identity_control_passthrough(self):
        rng = np.random.default_rng(10)
        r = quat_to_rotation(random_unit_quaternion(rng))
        control = ControlFrame(r0=np.eye(3), sample_count=1)
        assert np.max(np.abs(relative_rotation(r, control) - r)) < 1e-12

    def test_z_rotation_composition(self):
        control = ControlFrame(r0=rot_z(math.radians(30)), sample_count=3)
        r = relative_rotation(rot_z(math.radians(75)), control)
        assert np.max(np.abs(r - rot_z(math.radians(45)))) < 1e-10


class TestBatonTipPosition:
    def test_identity_translates_along_y(self):
        tip = baton_tip_position(np.eye(3), np.zeros(3), BatonSpec(0.35))
        assert np.allclose(tip, [0.0, 0.35, 0.0], atol=0)

    def test_z_rotation_maps_y_to_minus_x(self):
        tip = baton_tip_position(rot_z(math.pi / 2), np.array([0.1, 0.2, 0.3]), BatonSpec(0.35))
        assert np.allclose(tip, [-0.25, 0.2, 0.3], atol=1e-15)

    def test_isometry(self):
        rng = np.random.default_rng(11)
        baton = BatonSpec(0.35)
        for _ in range(100):
            r = quat_to_rotation(random_unit_quaternion(rng))
            palm = rng.standard_normal(3)
            tip = baton_tip_position(r, palm, baton)
            assert abs(np.linalg.norm(tip - palm) - 0.35) < 1e-12


class TestRoundTripAndComposition:
    def test_round_trip_through_matrix(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            q = random_unit_quaternion(rng)
            r = quat_to_rotation(q)
            back = Rotation.from_matrix(r).as_quat()  # scipy [x, y, z, w]
            back_wxyz = np.array([back[3], back[0], back[1], back[2]])
            target = q.as_array()
            err = min(np.max(np.abs(back_wxyz - target)), np.max(np.abs(back_wxyz + target)))
            assert err < 1e-9

    def test_composition_homomorphism(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            q1 = random_unit_quaternion(rng)
            q2 = random_unit_quaternion(rng)
            lhs = quat_to_rotation(q1 * q2)
            rhs = quat_to_rotation(q1) @ quat_to_rotation(q2)
            assert np.linalg.norm(lhs - rhs) < 1e-10


class TestDomainTypes:
    def test_baton_length_bounds(self):
        with pytest.raises(ValueError):
            BatonSpec(0.01)
        with pytest.raises(ValueError):
            BatonSpec(1.5)

    def test_control_frame_rejects_non_rotation(self):
        with pytest.raises(ValueError):
            ControlFrame(r0=np.ones((3, 3)), sample_count=1)

    def test_control_frame_rejects_zero_count(self):
        with pytest.raises(ValueError):
            ControlFrame(r0=np.eye(3), sample_count=0)
