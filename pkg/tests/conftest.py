from __future__ import annotations

import logging

import numpy as np
import pytest

from graspbench.geometry.convex import ConvexPiece
from graspbench.geometry.shapes import box_mesh, cylinder_mesh
from graspbench.geometry.transforms import Pose
from graspbench.grasping.gripper import default_gripper
from graspbench.kinematics import builtin_chain
from graspbench.physics.engine import PhysicsConfig
from graspbench.physics.scene import BodySpec, JointSpec, SceneGraph


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Keep settings and logs out of the real home directory."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "config"))
    monkeypatch.setenv("XDG_STATE_HOME", str(tmp_path / "state"))
    monkeypatch.delenv("GRASPBENCH_CONFIG", raising=False)
    monkeypatch.delenv("GRASPBENCH_LOG_LEVEL", raising=False)
    yield tmp_path
    # the CLI configures the package logger; undo it so caplog keeps working
    log = logging.getLogger("graspbench")
    for h in list(log.handlers):
        log.removeHandler(h)
        h.close()
    log.propagate = True
    log.setLevel(logging.NOTSET)


@pytest.fixture
def cube_mesh():
    """5 cm cube centred at the origin."""
    return box_mesh([0.025, 0.025, 0.025])


@pytest.fixture
def can_mesh():
    return cylinder_mesh(0.03, 0.10)


@pytest.fixture
def gripper():
    return default_gripper()


@pytest.fixture
def panda():
    return builtin_chain("panda7")


@pytest.fixture
def planar2r():
    return builtin_chain("planar2r")


@pytest.fixture
def physics_config():
    return PhysicsConfig(settle_duration=0.5, settle_window=0.2)


def _table(top_z: float = 0.0) -> BodySpec:
    return BodySpec(
        id="table",
        mobility="fixed",
        colliders=(ConvexPiece.box([0.5, 0.5, 0.02]),),
        initial_pose=Pose.from_translation([0.0, 0.0, top_z - 0.02]),
        category="furniture",
    )


def _cube(body_id: str, xyz, half: float = 0.025, category: str = "block") -> BodySpec:
    return BodySpec(
        id=body_id,
        mobility="free",
        colliders=(ConvexPiece.box([half, half, half]),),
        mass=0.2,
        initial_pose=Pose.from_translation(xyz),
        category=category,
    )


@pytest.fixture
def table_scene():
    """A fixed table top at z=0 with one cube resting on it."""
    return SceneGraph(bodies=(_table(), _cube("cube", [0.0, 0.0, 0.025])))


@pytest.fixture
def floating_scene():
    """A free cube with nothing below it."""
    return SceneGraph(bodies=(_cube("cube", [0.0, 0.0, 0.5]),))


@pytest.fixture
def drawer_scene():
    """Cabinet with a prismatic drawer along +x (range 0..0.2 m), closed."""
    cabinet = BodySpec(
        id="cabinet",
        mobility="fixed",
        colliders=(ConvexPiece.box([0.02, 0.2, 0.2], Pose.from_translation([-0.22, 0.0, 0.2])),),
        category="cabinet",
    )
    drawer = BodySpec(
        id="drawer",
        mobility="fixed",
        colliders=(ConvexPiece.box([0.15, 0.15, 0.05]),),
        initial_pose=Pose.from_translation([0.0, 0.0, 0.2]),
        category="cabinet",
    )
    joint = JointSpec(
        id="drawer_slide",
        parent="cabinet",
        child="drawer",
        kind="slide",
        axis=np.array([1.0, 0.0, 0.0]),
        anchor=np.zeros(3),
        range=(0.0, 0.2),
        initial=0.0,
    )
    return SceneGraph(bodies=(cabinet, drawer), joints=(joint,))
