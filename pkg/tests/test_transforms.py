import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.transform import Rotation

from graspbench.errors import ValidationError
from graspbench.geometry.transforms import (
    Pose,
    canonicalize_quat,
    geodesic_angle,
    orthonormal_basis,
    pose_distance,
    pose_distances_to,
    stack_poses,
)


def test_quaternions_are_canonical():
    q = canonicalize_quat([-2.0, 0.0, 0.0, 0.0])
    assert_allclose(q, [1.0, 0.0, 0.0, 0.0])
    p = Pose(np.zeros(3), [-0.5, 0.5, 0.5, 0.5])
    assert p.rotation[0] >= 0.0
    with pytest.raises(ValidationError):
        canonicalize_quat([0.0, 0.0, 0.0, 0.0])


def test_non_finite_translation_rejected():
    with pytest.raises(ValidationError):
        Pose.from_translation([0.0, np.nan, 0.0])


def test_pose_is_immutable():
    p = Pose.from_translation([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        p.translation[0] = 5.0


def test_compose_matches_matrices():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = Pose.from_rotvec(rng.normal(size=3), rng.normal(size=3))
        b = Pose.from_rotvec(rng.normal(size=3), rng.normal(size=3))
        assert_allclose((a @ b).as_matrix(), a.as_matrix() @ b.as_matrix(), atol=1e-12)
        assert (a @ a.inverse()).isclose(Pose.identity(), tol=1e-9)


def test_apply_points_and_vectors():
    p = Pose.from_axis_angle([0, 0, 1], math.pi / 2, t=[1.0, 0.0, 0.0])
    assert_allclose(p.apply([1.0, 0.0, 0.0]), [1.0, 1.0, 0.0], atol=1e-12)
    assert_allclose(p.apply_vector([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)
    pts = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert p.apply(pts).shape == (2, 3)


def test_matrix_roundtrip_agrees_with_scipy():
    r = Rotation.from_euler("xyz", [0.3, -0.2, 1.1])
    p = Pose.from_rotation_matrix(r.as_matrix(), [0.1, 0.2, 0.3])
    assert_allclose(p.matrix, r.as_matrix(), atol=1e-12)
    assert_allclose(p.rotvec(), r.as_rotvec(), atol=1e-12)
    assert Pose.from_matrix(p.as_matrix()).isclose(p, tol=1e-12)


def test_geodesic_angle_range():
    a = Pose.identity()
    b = Pose.from_axis_angle([1, 0, 0], 0.7)
    c = Pose.from_axis_angle([1, 0, 0], math.pi)
    assert geodesic_angle(a.rotation, b.rotation) == pytest.approx(0.7)
    assert geodesic_angle(a.rotation, c.rotation) == pytest.approx(math.pi)
    # q and -q are the same orientation
    assert geodesic_angle(b.rotation, -b.rotation) == pytest.approx(0.0, abs=1e-7)


def test_pose_distance_weights_rotation():
    a = Pose.identity()
    b = Pose.from_axis_angle([0, 0, 1], 1.0, t=[0.3, 0.4, 0.0])
    assert pose_distance(a, b) == pytest.approx(0.5 + 0.05 * 1.0)
    assert pose_distance(a, b, rot_weight=1.0) == pytest.approx(1.5)
    with pytest.raises(ValidationError):
        pose_distance(a, b, rot_weight=0.0)


def test_vectorized_distances_match_scalar():
    rng = np.random.default_rng(11)
    poses = [Pose.from_rotvec(rng.normal(size=3), rng.normal(size=3)) for _ in range(20)]
    ref = poses[0]
    t, q = stack_poses(poses)
    d = pose_distances_to(t, q, ref)
    assert_allclose(d, [pose_distance(p, ref) for p in poses], atol=1e-9)
    empty_t, empty_q = stack_poses([])
    assert empty_t.shape == (0, 3) and empty_q.shape == (0, 4)


def test_equality_is_exact():
    a = Pose.from_translation([0.1, 0.0, 0.0])
    assert a == Pose.from_translation([0.1, 0.0, 0.0])
    assert a != Pose.from_translation([0.1 + 1e-15, 0.0, 0.0])
    assert hash(a) == hash(Pose.from_translation([0.1, 0.0, 0.0]))


@pytest.mark.parametrize("x", [[1, 0, 0], [0, 0, 1], [0.3, -0.4, 0.866]])
def test_orthonormal_basis_is_right_handed(x):
    x = np.asarray(x, float) / np.linalg.norm(x)
    y, z = orthonormal_basis(x)
    m = np.stack([x, y, z], axis=1)
    assert_allclose(m.T @ m, np.eye(3), atol=1e-12)
    assert np.linalg.det(m) == pytest.approx(1.0)
