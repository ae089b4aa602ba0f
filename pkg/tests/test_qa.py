import numpy as np
import pytest

from graspbench.config import default_settings
from graspbench.errors import ValidationError
from graspbench.geometry.convex import ConvexPiece
from graspbench.geometry.transforms import Pose
from graspbench.physics.engine import RigidBodyEngine
from graspbench.physics.scene import BodySpec, JointSpec, SceneGraph
from graspbench.qa import (
    QAConfig,
    QAReport,
    Removal,
    lift_gain,
    qa_articulation,
    qa_intersections,
    qa_lift,
    qa_run_all,
    qa_run_batch,
    qa_stability,
)

QUICK = QAConfig(settle_duration=0.5, jitter_window=0.2, lift_duration=0.5)


@pytest.fixture
def engine(physics_config):
    return RigidBodyEngine(physics_config)


def box(body_id, half, xyz, mobility="free", mass=0.2):
    if np.isscalar(half):
        half = [half] * 3
    return BodySpec(body_id, mobility, (ConvexPiece.box(half),), mass=mass,
                    initial_pose=Pose.from_translation(xyz))


def table():
    return box("table", [0.5, 0.5, 0.02], [0.0, 0.0, -0.02], "fixed")


def low_drawer_scene(*extra):
    """Cabinet with a drawer 1 cm above the table top, sliding along +x by up to 0.2 m."""
    cabinet = box("cabinet", [0.02, 0.2, 0.06], [-0.22, 0.0, 0.07], "fixed")
    drawer = box("drawer", [0.15, 0.15, 0.05], [0.0, 0.0, 0.06], "fixed")
    joint = JointSpec("drawer_slide", "cabinet", "drawer", "slide", np.array([1.0, 0, 0]), np.zeros(3), (0.0, 0.2))
    return SceneGraph((table(), cabinet, drawer) + tuple(extra), (joint,))


# ---------- intersections ----------

def test_equal_free_bodies_drop_greater_id():
    scene = SceneGraph((box("b", 0.025, [0.01, 0, 0]), box("a", 0.025, [0, 0, 0])))
    rep = qa_intersections(scene, QUICK)
    assert rep.removed_ids == ["b"]
    assert rep.removed[0].reason == "intersection"
    assert rep.passed["intersections"] is False


def test_smaller_free_body_goes():
    scene = SceneGraph((box("a", 0.01, [0, 0, 0]), box("z", 0.05, [0, 0, 0])))
    assert qa_intersections(scene).removed_ids == ["a"]


def test_free_body_inside_fixed_goes():
    scene = SceneGraph((table(), box("cube", 0.025, [0, 0, 0])))
    rep = qa_intersections(scene)
    assert rep.removed_ids == ["cube"]
    assert "table" in rep.removed[0].detail


def test_fixed_overlap_is_only_a_warning():
    scene = SceneGraph((box("a", 0.05, [0, 0, 0], "fixed"), box("b", 0.05, [0.02, 0, 0], "fixed")))
    rep = qa_intersections(scene)
    assert rep.removed == []
    assert rep.warnings == ["fixed_overlap:a:b"]
    assert rep.passed["intersections"] is True


def test_shallow_contact_is_ignored():
    # 1 mm overlap is under the 2 mm depth threshold
    scene = SceneGraph((table(), box("cube", 0.025, [0, 0, 0.024])))
    assert qa_intersections(scene).removed == []


def test_articulated_parts_never_removed(drawer_scene):
    rep = qa_intersections(drawer_scene.with_body(box("knob", [0.01, 0.01, 0.01], [0.0, 0.0, 0.2])))
    assert rep.removed_ids == ["knob"]
    assert "with drawer" in rep.removed[0].detail


# ---------- stability ----------

def test_resting_cube_is_stable(engine, table_scene):
    rep = qa_stability(table_scene, engine, QUICK)
    assert rep.passed["stability"] is True


def test_falling_cube_is_removed(engine, floating_scene):
    rep = qa_stability(floating_scene, engine, QUICK)
    assert rep.removed_ids == ["cube"]
    assert rep.removed[0].reason == "jitter"


# ---------- lift ----------

def test_free_cube_lifts(engine, table_scene):
    assert lift_gain(table_scene, engine, "cube", QUICK) >= QUICK.lift_min
    assert qa_lift(table_scene, engine, QUICK).passed["lift"] is True


def test_enclosed_cube_is_removed(engine):
    case = BodySpec("case", "fixed", (
        ConvexPiece.box([0.1, 0.1, 0.005], Pose.from_translation([0.0, 0.0, -0.005])),
        ConvexPiece.box([0.1, 0.1, 0.005], Pose.from_translation([0.0, 0.0, 0.06])),
    ))
    scene = SceneGraph((case, box("cube", 0.025, [0.0, 0.0, 0.025])))
    rep = qa_lift(scene, engine, QUICK)
    assert rep.removed_ids == ["cube"]
    assert rep.removed[0].reason == "unliftable_contained"
    assert "inside case" in rep.removed[0].detail


def test_pinned_but_open_cube_is_kept(engine, caplog):
    beam = box("beam", [0.1, 0.1, 0.005], [0.0, 0.0, 0.06], "fixed")
    scene = SceneGraph((table(), beam, box("cube", 0.025, [0.0, 0.0, 0.025])))
    rep = qa_lift(scene, engine, QUICK)
    assert rep.removed == []
    assert rep.warnings == ["heavy_unobstructed:cube"]
    assert "not enclosed" in caplog.text


# ---------- articulation ----------

def test_free_blocker_is_removed(engine):
    scene = low_drawer_scene(box("blocker", 0.025, [0.2, 0.0, 0.025]))
    rep, cleaned = qa_articulation(scene, engine, QUICK)
    assert rep.removed_ids == ["blocker"]
    assert rep.removed[0].reason == "blocks_articulation"
    assert not cleaned.has_body("blocker")
    assert rep.scene_flags == []


def test_fixed_blocker_flags_scene(engine):
    scene = low_drawer_scene(box("post", 0.025, [0.2, 0.0, 0.025], "fixed"))
    rep, cleaned = qa_articulation(scene, engine, QUICK)
    assert rep.removed == []
    assert rep.scene_flags == ["articulation_blocked:drawer_slide"]
    assert rep.passed["articulation"] is False
    assert cleaned.has_body("post")


# ---------- full pipeline ----------

@pytest.mark.slow
def test_run_all_removes_blocker_and_is_idempotent(engine):
    scene = low_drawer_scene(box("blocker", 0.025, [0.2, 0.0, 0.025]), box("cube", 0.025, [0.3, 0.3, 0.025]))
    rep, cleaned = qa_run_all(scene, engine, QUICK)
    assert rep.removed_ids == ["blocker"]
    assert rep.passed == {"stability": True, "intersections": True, "lift": True, "articulation": False}
    assert not rep.all_passed
    assert rep.metadata["site_interpretation"] == "aabb"
    again, _ = qa_run_all(cleaned, engine, QUICK)
    assert again.removed == []
    assert again.all_passed


def test_batch_in_input_order(engine, drawer_scene):
    blocked = drawer_scene.with_body(box("post", 0.025, [0.2, 0.0, 0.2], "fixed"))
    batch = qa_run_batch([("ok", drawer_scene), ("blocked", blocked)], engine, QUICK)
    assert batch.names == ["ok", "blocked"]
    assert batch.pass_rates["articulation"] == 0.5
    assert batch.to_csv() == (
        "scene,Stab.,Lift,Inter.,Artic.\n"
        "ok,1,1,1,1\n"
        "blocked,1,1,1,0\n"
        "pass_rate,1.0000,1.0000,1.0000,0.5000\n"
    )
    threaded = qa_run_batch([("ok", drawer_scene), ("blocked", blocked)], engine, QUICK, threads=2)
    assert [r.to_dict()["passed"] for r in threaded.reports] == [r.to_dict()["passed"] for r in batch.reports]


# ---------- report and config ----------

def test_report_merge_and_roundtrip():
    rep = QAReport()
    frag = QAReport(passed={"lift": False}, removed=[Removal("a", "lift", "unliftable_contained")])
    rep.merge(frag)
    rep.merge(frag)
    assert rep.removed_ids == ["a"]
    back = QAReport.from_dict(rep.to_dict())
    assert back.to_dict() == rep.to_dict()
    assert not back.all_passed


def test_qa_config():
    assert QAConfig.from_settings(default_settings()) == QAConfig()
    with pytest.raises(ValidationError):
        QAConfig(site="mesh")
    with pytest.raises(ValidationError):
        QAConfig(articulation_min_fraction=0.0)
