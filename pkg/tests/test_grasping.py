import math

import numpy as np
import pytest

from graspbench.errors import PreconditionError, ValidationError
from graspbench.geometry.convex import ConvexPiece
from graspbench.geometry.transforms import Pose
from graspbench.grasping.clustering import cluster_and_select, farthest_point_clusters
from graspbench.grasping.filtering import (
    Obstacle,
    approach_poses,
    check_approach,
    collision_filter,
    object_obstacle,
)
from graspbench.grasping.gripper import GripperSpec
from graspbench.grasping.pipeline import GraspConfig, generate_articulated_grasps, generate_grasps
from graspbench.grasping.sampling import (
    ArticulatedTarget,
    ContactPair,
    GraspCandidate,
    antipodal_ok,
    approach_direction,
    bias_contacts,
    bias_score,
    grasp_poses_from_pair,
    pad_placements,
    sample_antipodal,
    sample_articulated,
)
from graspbench.physics.scene import BodySpec, JointSpec, SceneGraph


def make_grasp(center, closing, approach, width, bias=0.0):
    """Grasp with both contacts at the pad centres, closing along `closing`, approaching along `approach`."""
    c = np.asarray(center, float)
    x = np.asarray(closing, float)
    z = np.asarray(approach, float)
    pair = ContactPair(c - x * width / 2, c + x * width / 2, -x, x)
    r = np.stack([x, np.cross(z, x), z], axis=1)
    return GraspCandidate(Pose.from_rotation_matrix(r, c), pair, 0, bias)


def top_down(center=(0.0, 0.0, 0.0), width=0.05):
    return make_grasp(center, [1, 0, 0], [0, 0, -1], width)


def from_below(center=(0.0, 0.0, 0.0), width=0.05):
    return make_grasp(center, [1, 0, 0], [0, 0, 1], width)


@pytest.fixture
def handle_scene():
    """Fixed cabinet with a small handle sliding along +x (range 0..0.2 m)."""
    cabinet = BodySpec("cabinet", "fixed", (ConvexPiece.box([0.02, 0.2, 0.2]),),
                       initial_pose=Pose.from_translation([-0.22, 0.0, 0.2]))
    handle = BodySpec("handle", "fixed", (ConvexPiece.box([0.01, 0.03, 0.01]),),
                      initial_pose=Pose.from_translation([0.05, 0.0, 0.2]))
    joint = JointSpec("slide", "cabinet", "handle", "slide", np.array([1.0, 0, 0]), np.zeros(3), (0.0, 0.2))
    return SceneGraph((cabinet, handle), (joint,))


# ---------- sampling ----------

def test_cube_pairs_are_antipodal(cube_mesh, gripper):
    pairs = sample_antipodal(cube_mesh, gripper, 400, seed=3)
    assert pairs
    for p in pairs:
        assert p.width == pytest.approx(0.05, abs=1e-9)
        assert antipodal_ok(p.p1, p.p2, p.n1, p.n2, math.radians(15.0), gripper.max_opening)
        assert np.allclose(p.n1, -p.n2)


def test_sampling_is_deterministic(cube_mesh, gripper):
    a = sample_antipodal(cube_mesh, gripper, 200, seed=11)
    b = sample_antipodal(cube_mesh, gripper, 200, seed=11)
    assert len(a) == len(b)
    assert all(np.array_equal(x.p1, y.p1) and np.array_equal(x.p2, y.p2) for x, y in zip(a, b))


def test_can_pairs_respect_opening(can_mesh, gripper):
    pairs = sample_antipodal(can_mesh, gripper, 600, seed=0)
    assert pairs
    # end caps are 10 cm apart, wider than the gripper opens
    for p in pairs:
        assert p.width <= gripper.max_opening
        assert abs(p.axis[2]) < math.sin(math.radians(15.0)) + 1e-9


def test_sampling_rejects_bad_arguments(cube_mesh, gripper):
    with pytest.raises(ValidationError):
        sample_antipodal(cube_mesh, gripper, 0, seed=0)
    with pytest.raises(ValidationError):
        sample_antipodal(cube_mesh, gripper, 10, seed=0, friction_angle=math.pi / 2)


def test_antipodal_ok_rejects_wide_and_tilted():
    p1, p2 = np.array([-0.05, 0, 0]), np.array([0.05, 0, 0])
    n1, n2 = np.array([-1.0, 0, 0]), np.array([1.0, 0, 0])
    assert antipodal_ok(p1, p2, n1, n2, math.radians(15), 0.1)
    assert not antipodal_ok(p1, p2, n1, n2, math.radians(15), 0.099)
    tilt = np.array([-math.cos(math.radians(20)), math.sin(math.radians(20)), 0.0])
    assert not antipodal_ok(p1, p2, tilt, n2, math.radians(15), 0.1)
    assert antipodal_ok(p1, p2, tilt, n2, math.radians(25), 0.1)


def test_grasp_poses_place_pads_on_contacts(gripper):
    pair = ContactPair(np.array([0.0, -0.02, 0.1]), np.array([0.0, 0.02, 0.1]),
                       np.array([0.0, -1.0, 0.0]), np.array([0.0, 1.0, 0.0]), (0.003, 0.01))
    cands = grasp_poses_from_pair(pair, gripper, 8, bias=0.4)
    assert len(cands) == 8
    assert [c.roll_index for c in cands] == list(range(8))
    u, v = pair.pad_uv
    for c in cands:
        m = c.pose.matrix
        assert np.allclose(m.T @ m, np.eye(3), atol=1e-12)
        assert np.allclose(m[:, 0], [0.0, 1.0, 0.0])
        assert np.allclose(c.pose.apply(np.array([-0.02, u, v])), pair.p1, atol=1e-12)
        assert np.allclose(c.pose.apply(np.array([0.02, u, v])), pair.p2, atol=1e-12)
        assert c.bias_score == 0.4
    approaches = np.array([c.pose.matrix[:, 2] for c in cands])
    assert len({tuple(np.round(a, 9)) for a in approaches}) == 8


def test_grasp_poses_reject_degenerate(gripper):
    p = np.zeros(3)
    pair = ContactPair(p, p, np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]))
    with pytest.raises(ValidationError):
        grasp_poses_from_pair(pair, gripper, 4)
    good = ContactPair(p, np.array([0.01, 0, 0]), np.array([-1.0, 0, 0]), np.array([1.0, 0, 0]))
    with pytest.raises(ValidationError):
        grasp_poses_from_pair(good, gripper, 0)


def test_bias_score(gripper):
    hw, hh = gripper.pad_half
    assert bias_score((0.0, 0.0), gripper, thin=False) == 1.0
    assert bias_score((hw, 0.0), gripper, thin=False) == 0.0
    assert bias_score((0.0, hh), gripper, thin=False) == 0.0
    # thin objects prefer the fingertip
    assert bias_score((0.0, hh), gripper, thin=True) == 1.0
    assert bias_score((0.0, 0.0), gripper, thin=True) == pytest.approx(0.75)


def test_bias_contacts_sorted_and_stable(gripper):
    base = ContactPair(np.zeros(3), np.array([0.02, 0, 0]), np.array([-1.0, 0, 0]), np.array([1.0, 0, 0]))
    placed = pad_placements(base, gripper, 3)
    assert [p.pad_uv[1] for p in placed] == pytest.approx([0.0, gripper.pad_half[1] / 2, gripper.pad_half[1]])
    scored = bias_contacts(placed + [base], gripper, [0.05, 0.05, 0.05])
    scores = [s for _, s in scored]
    assert scores == sorted(scores, reverse=True)
    assert scored[0][0] is placed[0]
    assert scored[1][0] is base
    thin = bias_contacts(placed, gripper, [0.005, 0.05, 0.05])
    assert thin[0][0] is placed[2]
    with pytest.raises(ValidationError):
        pad_placements(base, gripper, 0)


def test_approach_direction():
    assert approach_direction(top_down().pose) == "top"
    assert approach_direction(from_below().pose) == "bottom"
    side = make_grasp([0, 0, 0], [1, 0, 0], [0, 1, 0], 0.05)
    assert approach_direction(side.pose) == "side"


def test_articulated_sampling_stays_on_leaf(handle_scene, gripper):
    target = ArticulatedTarget(handle_scene, handle_scene.joint("slide"), "handle")
    pairs = sample_articulated(target, gripper, 400, seed=1)
    assert pairs
    box = handle_scene.body("handle").world_aabb()
    for p in pairs:
        for pt in (p.p1, p.p2):
            assert np.all(pt >= box.min - 1e-9) and np.all(pt <= box.max + 1e-9)


def test_articulated_target_checks_leaf(handle_scene):
    with pytest.raises(PreconditionError):
        ArticulatedTarget(handle_scene, handle_scene.joint("slide"), "cabinet")


# ---------- clustering ----------

def _line(xs, biases):
    return [GraspCandidate(Pose.from_translation([x, 0.0, 0.0]), top_down().contacts, 0, b)
            for x, b in zip(xs, biases)]


def test_farthest_point_order():
    cands = _line([0.0, 0.1, 0.25, 1.0], [0.5, 0.9, 0.1, 0.2])
    res = farthest_point_clusters(cands, 3)
    assert res.centers == [1, 3, 2]
    assert res.radius == pytest.approx(0.1)
    assert res.assignments.tolist() == [0, 0, 2, 1]
    assert res.representatives == [1, 3, 2]
    picked = cluster_and_select(cands, 3)
    assert [c.pose.translation[0] for c in picked] == [0.1, 1.0, 0.25]


def test_representative_is_best_in_cluster():
    cands = _line([0.0, 0.01, 1.0], [0.3, 0.2, 0.9])
    res = farthest_point_clusters(cands, 2)
    assert res.centers == [2, 0]
    assert res.representatives == [2, 0]


def test_clustering_stops_on_duplicates():
    cands = _line([0.2, 0.2, 0.2], [0.1, 0.1, 0.1])
    res = farthest_point_clusters(cands, 5)
    assert res.centers == [0]
    assert res.radius == 0.0
    assert cluster_and_select([], 5) == []
    with pytest.raises(ValidationError):
        cluster_and_select(cands, 0)


def test_clustering_spreads_rotations():
    pair = top_down().contacts
    a = GraspCandidate(Pose.identity(), pair, 0, 0.0)
    b = GraspCandidate(Pose.from_axis_angle([0, 0, 1], math.pi / 2), pair, 1, 0.0)
    c = GraspCandidate(Pose.from_axis_angle([0, 0, 1], 0.01), pair, 2, 0.0)
    res = farthest_point_clusters([a, b, c], 2)
    assert res.centers == [0, 1]


# ---------- collision filter ----------

def test_top_down_grasp_clears_cube(cube_mesh, gripper):
    ob = object_obstacle("cube", cube_mesh)
    check = check_approach(gripper, top_down().pose, 0.05, [ob])
    assert check.clear
    assert check.stage is None


def test_too_narrow_opening_collides(cube_mesh, gripper):
    ob = object_obstacle("cube", cube_mesh)
    check = check_approach(gripper, top_down(width=0.03).pose, 0.03, [ob])
    assert not check.clear
    assert check.obstacle == "cube"


def test_trajectory_collision_reports_step():
    # the palm sweeps through a thin bar that neither end pose touches
    gripper = GripperSpec("long-approach", pregrasp_offset=0.1)
    bar = Obstacle("bar", (ConvexPiece.box([0.004, 0.1, 0.002]),), Pose.from_translation([0.0, 0.0, 0.1]))
    check = check_approach(gripper, top_down().pose, 0.05, [bar], samples=10)
    assert check.pregrasp_clear
    assert not check.trajectory_clear
    assert check.stage == "trajectory"
    assert check.step == 4
    assert check.obstacle == "bar"


def test_approach_poses_between_pregrasp_and_grasp(gripper):
    pose = top_down().pose
    poses = approach_poses(gripper, pose, 4)
    zs = [p.translation[2] for p in poses]
    assert zs == sorted(zs, reverse=True)
    assert all(0.0 < z < gripper.pregrasp_offset for z in zs)


def test_collision_filter_flags_without_dropping(cube_mesh, gripper):
    table = BodySpec("table", "fixed", (ConvexPiece.box([0.5, 0.5, 0.02]),),
                     initial_pose=Pose.from_translation([0.0, 0.0, -0.045]))
    cube = BodySpec("cube", "free", (ConvexPiece.box([0.025] * 3),), mass=0.2)
    scene = SceneGraph((table, cube))
    ob = object_obstacle("cube", cube_mesh)
    top = collision_filter(top_down(), ob, gripper, scene, "cube")
    assert top.flags.collision_free_isolated and top.flags.in_situ_ok
    below = collision_filter(from_below(), ob, gripper, scene, "cube")
    assert below.flags.collision_free_isolated
    assert below.flags.in_situ_ok is False
    iso_only = collision_filter(from_below(), ob, gripper)
    assert iso_only.flags.in_situ_ok is None


def test_mesh_and_piece_obstacles_agree(cube_mesh, gripper):
    mesh_ob = object_obstacle("cube", cube_mesh)
    piece_ob = object_obstacle("cube", None, [ConvexPiece.box([0.025] * 3)])
    for g in (top_down(), top_down(width=0.03), from_below(center=(0.0, 0.0, 0.06))):
        a = check_approach(gripper, g.pose, g.width, [mesh_ob])
        b = check_approach(gripper, g.pose, g.width, [piece_ob])
        assert a.clear == b.clear


# ---------- pipeline ----------

SMALL = GraspConfig(samples=300, pair_budget=40, rolls=4, pad_depth_samples=2, max_grasps=20, oversample=2)


def test_generate_grasps_on_cube(cube_mesh, gripper):
    gs = generate_grasps(cube_mesh, gripper, SMALL, seed=7, object_id="cube")
    c = gs.counters
    assert 0 < c["emitted"] <= SMALL.max_grasps
    assert c["pairs"] >= c["pairs_kept"]
    assert c["pairs_kept"] <= SMALL.pair_budget
    assert c["placements"] == c["pairs_kept"] * SMALL.pad_depth_samples
    assert c["poses"] == c["placements"] * SMALL.rolls
    assert c["emitted"] <= c["collision_free"] <= c["clustered"]
    assert len(gs.grasps) == c["emitted"]
    assert all(g.flags.collision_free_isolated for g in gs.grasps)
    assert gs.metadata["gripper"] == gripper.name
    assert sum(gs.approach_histogram().values()) == len(gs.grasps)
    assert gs.metadata["thin"] is False


def test_generate_grasps_is_deterministic(cube_mesh, gripper):
    a = generate_grasps(cube_mesh, gripper, SMALL, seed=7)
    b = generate_grasps(cube_mesh, gripper, SMALL, seed=7)
    assert [g.pose for g in a.grasps] == [g.pose for g in b.grasps]
    assert a.counters == b.counters


def test_generate_articulated_grasps(handle_scene, gripper):
    target = ArticulatedTarget(handle_scene, handle_scene.joint("slide"), "handle")
    gs = generate_articulated_grasps(target, gripper, SMALL, seed=2)
    assert gs.object_id == "handle"
    assert gs.metadata["joint"] == "slide"
    assert gs.grasps
    box = handle_scene.body("handle").world_aabb()
    for g in gs.grasps:
        assert np.all(g.contacts.midpoint >= box.min - 1e-9) and np.all(g.contacts.midpoint <= box.max + 1e-9)


def test_grasp_config_validation():
    with pytest.raises(ValidationError):
        GraspConfig(samples=0)
    with pytest.raises(ValidationError):
        GraspConfig(friction_angle_deg=90.0)
    assert GraspConfig().friction_angle == pytest.approx(math.radians(15.0))


def test_gripper_spec_validation():
    with pytest.raises(ValidationError):
        GripperSpec("bad", max_opening=0.0)
    with pytest.raises(ValidationError):
        GripperSpec("bad", pad_height=0.1, finger_length=0.05)
    g = GripperSpec("g")
    assert len(g.pieces(0.04)) == 3
    left, right = g.finger_pieces(0.04)
    assert left.frame.translation[0] == pytest.approx(-(0.02 + g.finger_thickness / 2))
    assert right.frame.translation[0] == pytest.approx(0.02 + g.finger_thickness / 2)
    assert GripperSpec.from_dict(g.to_dict()).to_dict() == g.to_dict()
