import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from graspbench.errors import ValidationError
from graspbench.geometry.bvh import Aabb
from graspbench.geometry.convex import (
    ConvexPiece,
    collide,
    contact_manifold,
    distance_between,
    obb_triangles_overlap,
    penetration_depth,
    segment_hits,
)
from graspbench.geometry.transforms import Pose

I = Pose.identity()


def at(x, y=0.0, z=0.0):
    return Pose.from_translation([x, y, z])


def test_constructors_validate():
    with pytest.raises(ValidationError):
        ConvexPiece.box([0.1, 0.0, 0.1])
    with pytest.raises(ValidationError):
        ConvexPiece.sphere(0.0)
    with pytest.raises(ValidationError):
        ConvexPiece.capsule(0.1, -1.0)
    with pytest.raises(ValidationError):
        ConvexPiece(np.zeros((0, 3)))


def test_volumes():
    assert ConvexPiece.box([0.1, 0.2, 0.3]).volume() == pytest.approx(0.048)
    assert ConvexPiece.sphere(0.5).volume() == pytest.approx(4 / 3 * math.pi * 0.125)
    cap = ConvexPiece.capsule(0.1, 0.2)
    assert cap.volume() == pytest.approx(4 / 3 * math.pi * 1e-3 + math.pi * 0.01 * 0.4)
    cube = ConvexPiece.hull(np.array(np.meshgrid([0, 1], [0, 1], [0, 1])).reshape(3, -1).T)
    assert cube.volume() == pytest.approx(1.0)
    assert ConvexPiece.segment([0, 0, 0], [1, 0, 0]).volume() == 0.0


def test_hull_drops_interior_points():
    pts = np.concatenate([ConvexPiece.box([1, 1, 1]).vertices, [[0.0, 0.0, 0.0], [0.2, 0.1, 0.0]]])
    assert len(ConvexPiece.hull(pts).vertices) == 8


def test_separated_boxes_report_separation():
    q = collide(ConvexPiece.box([0.1] * 3), I, ConvexPiece.box([0.1] * 3), at(0.25))
    assert not q.hit
    assert q.separation == pytest.approx(0.05, abs=1e-9)
    far = collide(ConvexPiece.box([0.1] * 3), I, ConvexPiece.box([0.1] * 3), at(1.0))
    assert far.contact is None and far.separation is None


def test_overlapping_boxes_normal_points_a_to_b():
    q = collide(ConvexPiece.box([0.1] * 3), I, ConvexPiece.box([0.1] * 3), at(0.19))
    assert q.hit
    assert q.contact.depth == pytest.approx(0.01, abs=1e-7)
    assert_allclose(q.contact.normal, [1.0, 0.0, 0.0], atol=1e-6)
    flipped = collide(ConvexPiece.box([0.1] * 3), at(0.19), ConvexPiece.box([0.1] * 3), I)
    assert_allclose(flipped.contact.normal, [-1.0, 0.0, 0.0], atol=1e-6)


def test_spheres_and_capsules():
    s = ConvexPiece.sphere(0.1)
    q = collide(s, I, s, at(0.15))
    assert q.contact.depth == pytest.approx(0.05, abs=1e-9)
    assert_allclose(q.contact.point, [0.075, 0.0, 0.0], atol=1e-9)
    cap = ConvexPiece.capsule(0.05, 0.2)
    # side by side along x, 0.12 apart: gap of 0.02 between the rounded sides
    assert distance_between(cap, I, cap, at(0.12)) == pytest.approx(0.02, abs=1e-9)
    assert penetration_depth(cap, I, s, at(0.0, 0.0, 0.3)) == pytest.approx(0.05, abs=1e-9)


def test_rotated_box_contact():
    rot = Pose.from_axis_angle([0, 0, 1], math.pi / 4, t=[0.0, 0.0, 0.0])
    b = ConvexPiece.box([0.1, 0.1, 0.1], rot)
    reach = 0.1 * math.sqrt(2.0)
    assert distance_between(b, I, ConvexPiece.sphere(0.05), at(reach + 0.06)) == pytest.approx(0.01, abs=1e-7)


def test_piece_sets_take_the_deepest_pair():
    a = [ConvexPiece.box([0.1] * 3), ConvexPiece.box([0.1] * 3, at(0.5))]
    b = ConvexPiece.sphere(0.1)
    q = collide(a, I, b, at(0.65))
    assert q.contact.depth == pytest.approx(0.05, abs=1e-7)


def test_segment_hits():
    box = ConvexPiece.box([0.1] * 3)
    assert segment_hits([-1, 0, 0], [1, 0, 0], box, I)
    assert not segment_hits([-1, 0.2, 0], [1, 0.2, 0], box, I)
    assert segment_hits([-1, 0.11, 0], [1, 0.11, 0], box, I, tol=0.02)


def test_resting_box_manifold_has_corner_support():
    ground = ConvexPiece.box([1.0, 1.0, 0.1])
    cube = ConvexPiece.box([0.05] * 3)
    contacts = contact_manifold(ground, at(0, 0, -0.1), cube, at(0, 0, 0.049), margin=0.005)
    assert len(contacts) >= 4
    for c in contacts:
        assert_allclose(c.normal, [0.0, 0.0, 1.0], atol=1e-6)
        assert c.depth == pytest.approx(0.001, abs=1e-6)
    assert contact_manifold(ground, at(0, 0, -0.1), cube, at(0, 0, 0.5), margin=0.005) == []


def test_transformed_piece_keeps_primitive():
    p = ConvexPiece.capsule(0.02, 0.1).transformed(at(1.0))
    assert p.primitive == "capsule"
    assert_allclose(p.frame.translation, [1.0, 0.0, 0.0])
    assert p.world_aabb(I).contains_point([1.0, 0.0, 0.11])


def test_obb_triangle_overlap():
    tri_inside = np.array([[[0, 0, 0], [0.05, 0, 0], [0, 0.05, 0]]], float)
    tri_far = tri_inside + 1.0
    tri_spanning = np.array([[[-1.0, -1.0, 0.0], [2.0, -1.0, 0.0], [-1.0, 2.0, 0.0]]])
    hits = obb_triangles_overlap(np.zeros(3), np.eye(3), np.array([0.1] * 3),
                                 np.concatenate([tri_inside, tri_far, tri_spanning]))
    assert hits.tolist() == [True, False, True]


def test_aabb_helpers():
    a = Aabb.from_points([[0, 0, 0], [1, 2, 3]])
    assert a.volume() == pytest.approx(6.0)
    assert_allclose(a.center, [0.5, 1.0, 1.5])
    assert a.contains_point([1, 2, 3])
    assert not a.contains_point([1.1, 0, 0])
    assert a.contains_point([1.1, 0, 0], tol=0.2)
    b = Aabb([2, 0, 0], [3, 1, 1])
    assert not a.overlaps(b)
    assert a.overlaps(b, tol=1.0)
    assert a.union(b).volume() == pytest.approx(18.0)
    assert len(a.corners()) == 8
