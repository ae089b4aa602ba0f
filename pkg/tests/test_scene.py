import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from graspbench.errors import SceneError
from graspbench.geometry.convex import ConvexPiece
from graspbench.geometry.transforms import Pose
from graspbench.physics.scene import (
    BodySpec,
    JointSpec,
    SceneGraph,
    WorldState,
    open_fraction,
    settled_scene,
)


def box(body_id, mobility="free", xyz=(0.0, 0.0, 0.0), **kw):
    return BodySpec(body_id, mobility, (ConvexPiece.box([0.05] * 3),),
                    initial_pose=Pose.from_translation(xyz), **kw)


def hinge(jid, parent, child, lo=0.0, hi=math.pi / 2, initial=None):
    return JointSpec(jid, parent, child, "hinge", np.array([0.0, 0.0, 1.0]), np.array([0.1, 0.0, 0.0]),
                     (lo, hi), initial)


def test_body_validation():
    with pytest.raises(SceneError):
        BodySpec("", "free", (ConvexPiece.sphere(0.1),))
    with pytest.raises(SceneError, match="mobility"):
        BodySpec("a", "floating", (ConvexPiece.sphere(0.1),))
    with pytest.raises(SceneError, match="collider"):
        BodySpec("a", "fixed", ())
    with pytest.raises(SceneError, match="mass"):
        BodySpec("a", "free", (ConvexPiece.sphere(0.1),), mass=0.0)
    with pytest.raises(SceneError, match="inertia"):
        BodySpec("a", "free", (ConvexPiece.sphere(0.1),), inertia=-np.eye(3))
    # fixed bodies need no mass
    assert not BodySpec("a", "fixed", (ConvexPiece.sphere(0.1),), mass=0.0).is_free


def test_default_inertia_is_box_inertia():
    b = box("a", mass=1.2)
    assert_allclose(np.diag(b.inertia), [1.2 / 12 * 0.02] * 3)


def test_joint_validation():
    with pytest.raises(SceneError, match="kind"):
        JointSpec("j", "a", "b", "ball", np.array([0, 0, 1.0]), np.zeros(3), (0.0, 1.0))
    with pytest.raises(SceneError, match="axis"):
        JointSpec("j", "a", "b", "slide", np.zeros(3), np.zeros(3), (0.0, 1.0))
    with pytest.raises(SceneError, match="range"):
        JointSpec("j", "a", "b", "slide", np.array([1.0, 0, 0]), np.zeros(3), (1.0, 1.0))
    with pytest.raises(SceneError, match="outside"):
        JointSpec("j", "a", "b", "slide", np.array([1.0, 0, 0]), np.zeros(3), (0.0, 1.0), 2.0)
    # default initial is 0 clamped into the range
    assert JointSpec("j", "a", "b", "slide", np.array([2.0, 0, 0]), np.zeros(3), (0.2, 1.0)).initial == 0.2


def test_scene_validation():
    with pytest.raises(SceneError, match="duplicate"):
        SceneGraph((box("a"), box("a")))
    with pytest.raises(SceneError, match="unknown body"):
        SceneGraph((box("a"),), (hinge("j", "a", "b"),))
    with pytest.raises(SceneError, match="already has a parent"):
        SceneGraph((box("a"), box("b"), box("c")), (hinge("j1", "a", "c"), hinge("j2", "b", "c")))
    with pytest.raises(SceneError, match="cycle"):
        SceneGraph((box("a"), box("b")), (hinge("j1", "a", "b"), hinge("j2", "b", "a")))


def test_articulation_queries():
    scene = SceneGraph(
        (box("cab", "fixed"), box("door", "fixed"), box("knob", "free"), box("mug")),
        (hinge("door_hinge", "cab", "door"), hinge("knob_joint", "door", "knob")),
    )
    assert scene.articulation_groups["cab"] == frozenset({"cab", "door", "knob"})
    assert scene.same_articulation("door", "knob")
    assert not scene.is_articulated("mug")
    assert scene.subtree("door_hinge") == ("door", "knob")
    assert scene.removable("mug")
    assert not scene.removable("knob")
    assert [b.id for b in scene.free_bodies()] == ["mug"]
    assert scene.root_of("knob") == "cab"
    with pytest.raises(SceneError):
        scene.body("nope")


def test_slide_child_follows_joint(drawer_scene):
    state = WorldState.initial(drawer_scene).with_joint("drawer_slide", 0.1)
    poses = drawer_scene.posed(state.poses, state.joint_q)
    assert_allclose(poses["drawer"].translation, [0.1, 0.0, 0.2], atol=1e-12)
    assert open_fraction(drawer_scene, state, "drawer_slide") == pytest.approx(0.5)


def test_hinge_rotates_about_anchor():
    scene = SceneGraph((box("cab", "fixed"), box("door", "fixed", xyz=(0.2, 0.0, 0.0))),
                       (hinge("h", "cab", "door"),))
    poses = scene.posed({"cab": Pose.identity(), "door": scene.body("door").initial_pose}, {"h": math.pi / 2})
    # door centre was 0.1 m in front of the anchor at x=0.1; a quarter turn puts it at +y
    assert_allclose(poses["door"].translation, [0.1, 0.1, 0.0], atol=1e-12)


def test_derived_scenes(table_scene):
    moved = table_scene.with_poses({"cube": Pose.from_translation([0.1, 0.0, 0.025])})
    assert_allclose(moved.body("cube").initial_pose.translation, [0.1, 0.0, 0.025])
    assert table_scene.body("cube").initial_pose.translation[0] == 0.0
    assert [b.id for b in table_scene.without_bodies(["cube"]).bodies] == ["table"]
    with pytest.raises(SceneError):
        table_scene.without_bodies(["ghost"])
    extra = table_scene.with_body(box("ball", xyz=(0.0, 0.0, 0.3)))
    assert extra.has_body("ball")
    assert [b.id for b in table_scene.fragment(["cube"]).bodies] == ["cube"]


def test_world_state_updates_are_pure(table_scene):
    s0 = WorldState.initial(table_scene)
    s1 = s0.with_velocity("cube", [0.0, 0.0, 1.0])
    assert_allclose(s0.linear["cube"], 0.0)
    assert_allclose(s1.linear["cube"], [0.0, 0.0, 1.0])
    assert s0 == WorldState.initial(table_scene)
    assert s0 != s1
    s2 = s0.with_pose("cube", Pose.from_translation([0.0, 0.0, 1.0]))
    assert s2.pose("cube").translation[2] == 1.0
    with pytest.raises(SceneError):
        s0.pose("ghost")


def test_settled_scene_takes_state(drawer_scene):
    state = WorldState.initial(drawer_scene).with_joint("drawer_slide", 0.05)
    scene = settled_scene(drawer_scene, state)
    assert scene.joint("drawer_slide").initial == 0.05
