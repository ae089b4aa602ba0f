import math

import numpy as np
import pytest

from graspbench.bench.episode import (
    BenchConfig,
    Camera,
    ContactImpulse,
    EpisodeState,
    Snapshot,
    TaskObjects,
    TaskSpec,
    episode_from_states,
    transitive_support,
)
from graspbench.bench.predicates import (
    SuccessResult,
    eval_close,
    eval_navigate,
    eval_open,
    eval_open_door,
    eval_pick,
    eval_place,
    eval_place_color,
    eval_place_next_to,
    evaluate,
    grasp_transitions,
    oracle_success,
    visible_fraction,
)
from graspbench.config import default_settings
from graspbench.errors import PreconditionError, ValidationError
from graspbench.geometry.convex import ConvexPiece
from graspbench.geometry.transforms import Pose
from graspbench.physics.engine import RigidBodyEngine
from graspbench.physics.scene import BodySpec, JointSpec, SceneGraph

EPS = 1e-6
G = 9.81


def body(body_id, half, xyz, mobility="free", mass=0.2):
    return BodySpec(body_id, mobility, (ConvexPiece.box(half),), mass=mass,
                    initial_pose=Pose.from_translation(xyz))


def at(x, y=0.0, z=0.0, yaw_deg=0.0):
    return Pose.from_axis_angle([0, 0, 1], math.radians(yaw_deg), t=[x, y, z])


@pytest.fixture
def kitchen():
    return SceneGraph((
        body("table", [0.5, 0.5, 0.02], [0.0, 0.0, -0.02], "fixed"),
        body("stool", [0.2, 0.2, 0.02], [1.0, 0.0, -0.02], "fixed"),
        body("bowl", [0.05, 0.05, 0.02], [0.0, 0.0, 0.02]),
        body("bowl_blue", [0.05, 0.05, 0.02], [0.3, 0.0, 0.02]),
        body("plate", [0.06, 0.06, 0.005], [0.0, 0.3, 0.005]),
        body("vase", [0.05, 0.05, 0.05], [-0.3, 0.0, 0.05]),
        body("apple", [0.03, 0.03, 0.03], [0.0, 0.0, 0.07]),
        body("gripper", [0.01, 0.04, 0.02], [0.0, 0.0, 0.3], "fixed"),
    ))


@pytest.fixture
def cabinet():
    return SceneGraph(
        (body("cabinet", [0.3, 0.3, 0.3], [0.0, 0.0, 0.3], "fixed"),
         body("drawer", [0.1, 0.1, 0.05], [0.35, 0.0, 0.3], "fixed"),
         body("door", [0.01, 0.2, 0.3], [0.31, 0.4, 0.3], "fixed")),
        (JointSpec("slide", "cabinet", "drawer", "slide", np.array([1.0, 0, 0]), np.zeros(3), (0.0, 1.0)),
         JointSpec("hinge", "cabinet", "door", "hinge", np.array([0, 0, 1.0]), np.array([0.31, 0.6, 0.3]),
                   (0.0, math.radians(100.0)))),
    )


@pytest.fixture
def hallway():
    return SceneGraph((
        body("floor", [5.0, 5.0, 0.05], [0.0, 0.0, -0.05], "fixed"),
        body("mug", [0.05, 0.05, 0.05], [4.0, 0.0, 0.5]),
    ))


def episode(scene, objects, final_poses=None, initial_poses=None, support=None, joint_q0=None, joint_q1=None,
            **kw):
    s0 = Snapshot(0.0, dict(initial_poses or {}), dict(joint_q0 or {}))
    s1 = Snapshot(1.0, dict(final_poses or {}), dict(joint_q1 or {}))
    return EpisodeState(scene, objects, (s0, s1), support=support, **kw)


def head_camera():
    # looks along +x from 0.5 m above the robot base
    return Camera(Pose.from_axis_angle([0, 1, 0], math.pi / 2, t=[0.0, 0.0, 0.5]),
                  fx=300.0, fy=300.0, cx=320.0, cy=240.0, width=640, height=480)


# ---------- boundary table ----------

def pick_case(kitchen, lift, support):
    obj = TaskObjects("apple", holders=("gripper",))
    sup = {"apple": {"gripper": 1.0 - support, "table": support}}
    return eval_pick(episode(kitchen, obj, {"apple": at(0.0, 0.0, 0.07 + lift)}, support=sup))


def place_case(kitchen, support=1.0, shift=0.0, yaw=0.0):
    obj = TaskObjects("apple", receptacle="bowl")
    sup = {"apple": {"bowl": support, "table": 1.0 - support}}
    return eval_place(episode(kitchen, obj, {"bowl": at(shift, 0.0, 0.02, yaw)}, support=sup))


def next_to_case(kitchen, gap=0.03, shift=0.0, yaw=0.0):
    obj = TaskObjects("apple", receptacle="vase")
    sup = {"apple": {"table": 1.0}, "vase": {"table": 1.0}}
    final = {"apple": at(-0.25 + gap + 0.03, 0.0, 0.03), "vase": at(-0.3, shift, 0.05, yaw)}
    return eval_place_next_to(episode(kitchen, obj, final, support=sup))


def joint_case(cabinet, fn, joint, f0, f1):
    j = cabinet.joint(joint)
    ep = episode(cabinet, TaskObjects("drawer", joint=joint),
                 joint_q0={joint: j.position_at(f0)}, joint_q1={joint: j.position_at(f1)})
    return fn(ep)


def navigate_case(hallway, distance):
    ep = episode(hallway, TaskObjects("mug"), {"mug": at(distance, 0.0, 0.5)},
                 camera=head_camera(), robot_base=np.zeros(3), declared_done=True)
    return eval_navigate(ep)


BOUNDARY_CASES = [
    ("pick lift above", lambda k, c, h: pick_case(k, 0.01 + EPS, 0.0), None),
    ("pick lift below", lambda k, c, h: pick_case(k, 0.01 - EPS, 0.0), "lift"),
    ("pick support at max", lambda k, c, h: pick_case(k, 0.02, 0.05), None),
    ("pick support above max", lambda k, c, h: pick_case(k, 0.02, 0.05 + EPS), "supported"),
    ("place support at half", lambda k, c, h: place_case(k, support=0.5), None),
    ("place support below half", lambda k, c, h: place_case(k, support=0.5 - EPS), "support"),
    ("place shift below", lambda k, c, h: place_case(k, shift=0.10 - EPS), None),
    ("place shift above", lambda k, c, h: place_case(k, shift=0.10 + EPS), "receptacle_displacement"),
    ("place rotation below", lambda k, c, h: place_case(k, yaw=45.0 - 1e-4), None),
    ("place rotation above", lambda k, c, h: place_case(k, yaw=45.0 + 1e-4), "receptacle_rotation"),
    ("next_to gap below", lambda k, c, h: next_to_case(k, gap=0.05 - EPS), None),
    ("next_to gap above", lambda k, c, h: next_to_case(k, gap=0.05 + EPS), "gap"),
    ("next_to shift below", lambda k, c, h: next_to_case(k, shift=0.05 - EPS), None),
    ("next_to shift above", lambda k, c, h: next_to_case(k, shift=0.05 + EPS), "receptacle_displacement"),
    ("next_to rotation below", lambda k, c, h: next_to_case(k, yaw=45.0 - 1e-4), None),
    ("next_to rotation above", lambda k, c, h: next_to_case(k, yaw=45.0 + 1e-4), "receptacle_rotation"),
    ("open at threshold", lambda k, c, h: joint_case(c, eval_open, "slide", 0.0, 0.15), None),
    ("open below", lambda k, c, h: joint_case(c, eval_open, "slide", 0.0, 0.15 - EPS), "open_fraction"),
    ("close at threshold", lambda k, c, h: joint_case(c, eval_close, "slide", 0.5, 0.15), None),
    ("close above", lambda k, c, h: joint_case(c, eval_close, "slide", 0.5, 0.15 + EPS), "open_fraction"),
    ("door above", lambda k, c, h: joint_case(c, eval_open_door, "hinge", 0.0, 0.67 + EPS), None),
    ("door below", lambda k, c, h: joint_case(c, eval_open_door, "hinge", 0.0, 0.67 - EPS), "open_fraction"),
    ("navigate inside", lambda k, c, h: navigate_case(h, 1.5 - EPS), None),
    ("navigate at distance", lambda k, c, h: navigate_case(h, 1.5), "distance"),
]


@pytest.mark.parametrize("case,violated", [(c[1], c[2]) for c in BOUNDARY_CASES],
                         ids=[c[0] for c in BOUNDARY_CASES])
def test_boundary_table(kitchen, cabinet, hallway, case, violated):
    result = case(kitchen, cabinet, hallway)
    assert result.success is (violated is None)
    assert result.violated == violated


def test_boundary_table_size():
    assert len(BOUNDARY_CASES) == 24


# ---------- task semantics ----------

def test_pick_on_shelf_edge_fails(kitchen):
    ep = episode(kitchen, TaskObjects("apple"), {"apple": at(0.0, 0.0, 0.09)}, support={"apple": {"stool": 1.0}})
    r = eval_pick(ep)
    assert not r.success and r.violated == "supported"
    assert r.measured["lift_height"] == pytest.approx(0.02)


def test_place_is_transitive(kitchen):
    sup = {"apple": {"plate": 1.0}, "plate": {"bowl": 0.8, "table": 0.2}}
    ep = episode(kitchen, TaskObjects("apple", receptacle="bowl"), support=sup)
    r = eval_place(ep)
    assert r.success
    assert r.measured["support_fraction"] == pytest.approx(0.8)


def test_transitive_support_caps_at_one():
    direct = {"a": {"b": 0.7, "c": 0.3}, "b": {"c": 1.0}}
    assert transitive_support(direct, "a", "c") == pytest.approx(1.0)
    assert transitive_support(direct, "a", "b") == pytest.approx(0.7)
    assert transitive_support(direct, "c", "a") == 0.0


def test_place_color(kitchen):
    objects = TaskObjects("apple", receptacle="bowl", distractors=("bowl_blue",))
    right = episode(kitchen, objects, support={"apple": {"bowl": 1.0}})
    assert eval_place_color(right).success
    wrong = episode(kitchen, objects, support={"apple": {"bowl_blue": 1.0}})
    r = eval_place_color(wrong)
    assert r.violated == "wrong_receptacle"
    assert r.measured["distractor_support_fraction"] == 1.0
    table = episode(kitchen, objects, support={"apple": {"table": 1.0}})
    assert eval_place_color(table).violated == "support"
    with pytest.raises(ValidationError):
        eval_place_color(right, distractors=["bowl"])


def test_next_to_needs_same_support_surface(kitchen):
    objects = TaskObjects("apple", receptacle="vase")
    final = {"apple": at(-0.19, 0.0, 0.03)}
    ep = episode(kitchen, objects, final, support={"apple": {"stool": 1.0}, "vase": {"table": 1.0}})
    assert eval_place_next_to(ep).violated == "support_surface"
    held = episode(kitchen, objects, final, support={"apple": {"gripper": 1.0}, "vase": {"table": 1.0}})
    held = EpisodeState(held.scene, TaskObjects("apple", receptacle="vase", holders=("gripper",)),
                        held.snapshots, support=held.support)
    # an object still in the gripper has no support surface
    assert eval_place_next_to(held).violated == "support_surface"


def test_navigate_requires_done_and_visibility(hallway):
    base = dict(camera=head_camera(), robot_base=np.zeros(3))
    not_done = episode(hallway, TaskObjects("mug"), {"mug": at(1.0, 0.0, 0.5)}, **base)
    assert eval_navigate(not_done).violated == "declared_done"
    far = episode(hallway, TaskObjects("mug"), {"mug": at(3.0, 0.0, 0.5)}, declared_done=True, **base)
    assert eval_navigate(far).violated == "distance"
    walled = hallway.with_body(body("wall", [0.02, 1.0, 1.0], [0.5, 0.0, 0.5], "fixed"))
    hidden = episode(walled, TaskObjects("mug"), {"mug": at(1.0, 0.0, 0.5)}, declared_done=True, **base)
    r = eval_navigate(hidden)
    assert r.violated == "visibility"
    assert r.measured["visible_fraction"] == 0.0
    with pytest.raises(PreconditionError):
        eval_navigate(episode(hallway, TaskObjects("mug"), declared_done=True, robot_base=np.zeros(3)))


def test_navigate_distance_is_horizontal(hallway):
    ep = episode(hallway, TaskObjects("mug"), {"mug": at(1.4, 0.0, 1.2)}, camera=head_camera(),
                 robot_base=np.zeros(3), declared_done=True)
    assert eval_navigate(ep).measured["distance"] == pytest.approx(1.4)
    euclid = eval_navigate(ep, BenchConfig(navigate_metric="euclidean"))
    assert euclid.measured["distance"] == pytest.approx(math.hypot(1.4, 1.2))
    assert euclid.violated == "distance"


def test_visible_fraction_outside_frustum(hallway):
    ep = episode(hallway, TaskObjects("mug"), {"mug": at(-2.0, 0.0, 0.5)}, camera=head_camera())
    assert visible_fraction(ep, "mug") == 0.0
    front = episode(hallway, TaskObjects("mug"), {"mug": at(2.0, 0.0, 0.5)}, camera=head_camera())
    assert visible_fraction(front, "mug") == 1.0


def test_articulation_examples(cabinet):
    # drawer range scaled to [0, 0.4]: q = 0.08 is 20 % open
    scene = SceneGraph(cabinet.bodies, (JointSpec("slide", "cabinet", "drawer", "slide", np.array([1.0, 0, 0]),
                                                  np.zeros(3), (0.0, 0.4)),))
    ep = episode(scene, TaskObjects("drawer", joint="slide"), joint_q1={"slide": 0.08})
    assert eval_open(ep).measured["open_fraction"] == pytest.approx(0.2)
    assert eval_open(ep).success
    door = episode(cabinet, TaskObjects("door", joint="hinge"), joint_q1={"hinge": math.radians(60.0)})
    assert not eval_open_door(door).success
    with pytest.raises(PreconditionError):
        eval_open(episode(cabinet, TaskObjects("drawer")))


def test_predicates_are_pure(kitchen):
    ep = episode(kitchen, TaskObjects("apple", receptacle="bowl"), support={"apple": {"bowl": 0.6}})
    assert eval_place(ep) == eval_place(ep)


def test_task_spec_overrides(cabinet):
    ep = episode(cabinet, TaskObjects("drawer", joint="slide"), joint_q1={"slide": 0.3})
    assert evaluate(ep, TaskSpec("open")).success
    assert not evaluate(ep, TaskSpec("open", {"open_fraction": 0.5})).success
    with pytest.raises(ValidationError):
        TaskSpec("fetch")
    with pytest.raises(ValidationError):
        TaskSpec("open", {"open_fraction": -0.1})
    with pytest.raises(ValidationError):
        evaluate(ep, TaskSpec("open", {"opening": 0.5}))


def test_bench_config_from_settings():
    cfg = BenchConfig.from_settings(default_settings())
    assert cfg == BenchConfig()
    with pytest.raises(ValidationError):
        BenchConfig(navigate_metric="manhattan")


def test_success_result_consistency():
    with pytest.raises(ValidationError):
        SuccessResult(True, {}, "lift")
    with pytest.raises(ValidationError):
        SuccessResult(False, {})


# ---------- episode model ----------

def test_episode_validation(kitchen):
    snap = Snapshot(0.0, {})
    with pytest.raises(ValidationError):
        EpisodeState(kitchen, TaskObjects("apple"), ())
    with pytest.raises(ValidationError):
        EpisodeState(kitchen, TaskObjects("pear"), (snap,))
    with pytest.raises(ValidationError):
        EpisodeState(kitchen, TaskObjects("apple"), (Snapshot(1.0, {}), snap))
    with pytest.raises(ValidationError, match="sum above 1"):
        EpisodeState(kitchen, TaskObjects("apple"), (snap,), support={"apple": {"bowl": 0.7, "table": 0.6}})
    with pytest.raises(ValidationError):
        EpisodeState(kitchen, TaskObjects("apple", joint="hinge"), (snap,))


def test_support_from_contact_impulses(kitchen):
    m = kitchen.body("apple").mass
    times = np.linspace(0.0, 1.0, 11)
    snaps = []
    for i, t in enumerate(times):
        dt = 0.1 if i else 0.002
        # the bowl carries the apple (impulse applied to body_b = apple)
        snaps.append(Snapshot(float(t), {}, {}, (ContactImpulse("bowl", "apple", np.array([0.0, 0.0, m * G * dt])),)))
    ep = EpisodeState(kitchen, TaskObjects("apple", receptacle="bowl"), tuple(snaps))
    direct = ep.direct_support(0.5)
    assert direct["apple"]["bowl"] == pytest.approx(1.0)
    assert ep.supporting_body("apple", 0.5) == "bowl"
    assert eval_place(ep).success


def test_support_from_simulated_stack(table_scene, physics_config):
    engine = RigidBodyEngine(physics_config)
    state = engine.initial_state(table_scene)
    states = [state]
    for _ in range(50):
        state = engine.step(table_scene, state)
        states.append(state)
    ep = episode_from_states(table_scene, states, TaskObjects("cube", receptacle="table"))
    assert ep.support_fraction("cube", "table", 0.05) == pytest.approx(1.0, abs=0.1)


def test_oracle_and_grasp_transitions(kitchen):
    lifts = [0.0, 0.0, 0.05, 0.06, 0.0]
    holding = [False, True, True, False, True]
    snaps = []
    for i, (dz, held) in enumerate(zip(lifts, holding)):
        contacts = (ContactImpulse("gripper", "apple", np.zeros(3)),) if held else ()
        snaps.append(Snapshot(float(i), {"apple": at(0.0, 0.0, 0.07 + dz)}, {}, contacts))
    ep = EpisodeState(kitchen, TaskObjects("apple", holders=("gripper",)), tuple(snaps),
                      support={"apple": {"gripper": 1.0}})
    res = oracle_success(ep, TaskSpec("pick"))
    assert not res.final.success
    assert res.first_success == 2
    assert res.oracle_success
    assert res.as_dict()["first_success"] == 2
    assert grasp_transitions(ep, "apple", ["gripper"]) == 2
    assert grasp_transitions(ep, "apple", ["gripper"], until=2) == 1
    with pytest.raises(ValidationError):
        grasp_transitions(ep, "pear", ["gripper"])


def test_camera_projection():
    cam = head_camera()
    uv, inside = cam.project(np.array([[2.0, 0.0, 0.5], [-2.0, 0.0, 0.5], [2.0, 10.0, 0.5]]))
    assert uv[0] == pytest.approx([320.0, 240.0])
    assert inside.tolist() == [True, False, False]
    with pytest.raises(ValidationError):
        Camera(Pose.identity(), 0.0, 1.0, 0.0, 0.0, 10, 10)
