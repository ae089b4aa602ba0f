"""
Gripper collision checks along the approach: pre-grasp pose, interpolated
trajectory, grasp pose.

Mesh obstacles are tested with exact box/triangle separating axes (BVH culled),
convex-piece obstacles with GJK/EPA.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from ..geometry.convex import ConvexPiece, box_pieces_overlap_mesh, collide
from ..geometry.mesh import TriangleMesh
from ..geometry.transforms import Pose
from ..physics.scene import SceneGraph
from .gripper import GripperSpec
from .sampling import GraspCandidate


logger = logging.getLogger(__name__)

STAGE_PREGRASP = "pregrasp"
STAGE_TRAJECTORY = "trajectory"
STAGE_GRASP = "grasp"


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Collision geometry placed in the frame the grasp poses are expressed in."""

    id: str
    pieces: Tuple[ConvexPiece, ...] = ()
    pose: Pose = field(default_factory=Pose.identity)
    mesh: Optional[TriangleMesh] = None

    @classmethod
    def from_mesh(cls, id: str, mesh: TriangleMesh) -> "Obstacle":
        return cls(id, (), Pose.identity(), mesh)


@dataclass(frozen=True)
class ApproachCheck:
    pregrasp_clear: bool
    trajectory_clear: bool
    grasp_clear: bool
    stage: Optional[str] = None      # first failing stage
    step: Optional[int] = None       # trajectory sample index (1-based) when stage == trajectory
    obstacle: Optional[str] = None

    @property
    def clear(self) -> bool:
        return self.pregrasp_clear and self.trajectory_clear and self.grasp_clear


def scene_obstacles(scene: SceneGraph, exclude: Iterable[str] = (), poses=None) -> List[Obstacle]:
    skip = set(exclude)
    out = []
    for b in scene.bodies:
        if b.id in skip:
            continue
        pose = poses[b.id] if poses is not None else b.initial_pose
        out.append(Obstacle(b.id, b.colliders, pose))
    return out


def open_width(gripper: GripperSpec, width: float, clearance: float) -> float:
    return min(gripper.max_opening, width + clearance)


def gripper_hits(gripper: GripperSpec, pose: Pose, opening: float,
                 obstacles: Sequence[Obstacle]) -> Optional[str]:
    """Id of the first obstacle the gripper overlaps at `pose`, or None."""
    parts = gripper.pieces(opening)
    boxes = None
    for ob in obstacles:
        if ob.mesh is not None:
            if boxes is None:
                boxes = [(pose.compose(frame), half) for frame, half in gripper.box_parts(opening)]
            if box_pieces_overlap_mesh(boxes, ob.mesh.corners, ob.mesh.bvh):
                return ob.id
        elif ob.pieces and collide(parts, pose, ob.pieces, ob.pose, max_separation=0.0).hit:
            return ob.id
    return None


def approach_poses(gripper: GripperSpec, pose: Pose, samples: int) -> List[Pose]:
    """`samples` poses strictly between the pre-grasp pose and the grasp pose."""
    start = gripper.pregrasp_pose(pose)
    out = []
    for k in range(1, samples + 1):
        s = k / (samples + 1)
        t = (1.0 - s) * start.translation + s * pose.translation
        out.append(Pose(t, pose.rotation))
    return out


def check_approach(gripper: GripperSpec, pose: Pose, width: float, obstacles: Sequence[Obstacle],
                   clearance: float = 0.005, samples: int = 10) -> ApproachCheck:
    opening = open_width(gripper, width, clearance)
    hit = gripper_hits(gripper, gripper.pregrasp_pose(pose), opening, obstacles)
    if hit is not None:
        return ApproachCheck(False, False, False, STAGE_PREGRASP, None, hit)
    for k, p in enumerate(approach_poses(gripper, pose, samples), start=1):
        hit = gripper_hits(gripper, p, opening, obstacles)
        if hit is not None:
            return ApproachCheck(True, False, False, STAGE_TRAJECTORY, k, hit)
    hit = gripper_hits(gripper, pose, opening, obstacles)
    if hit is not None:
        return ApproachCheck(True, True, False, STAGE_GRASP, None, hit)
    return ApproachCheck(True, True, True)


def collision_filter(c: GraspCandidate, geometry: Obstacle, gripper: GripperSpec,
                     scene: Optional[SceneGraph] = None, object_id: Optional[str] = None,
                     clearance: float = 0.005, samples: int = 10) -> GraspCandidate:
    """
    Flag (never drop) the candidate: collision_free_isolated against the object alone;
    with a scene, in_situ_ok against every other body (grasp pose must then be in the
    scene frame).
    """
    iso = check_approach(gripper, c.pose, c.width, [geometry], clearance, samples)
    out = c.with_flags(collision_free_isolated=iso.clear)
    if scene is not None:
        exclude = [object_id] if object_id else []
        situ = check_approach(gripper, c.pose, c.width, scene_obstacles(scene, exclude), clearance, samples)
        if not situ.clear:
            logger.debug("in-situ collision at %s (step %s) with %s", situ.stage, situ.step, situ.obstacle)
        out = out.with_flags(in_situ_ok=situ.clear)
    return out


def object_obstacle(id: str, mesh: Optional[TriangleMesh], pieces: Sequence[ConvexPiece] = ()) -> Obstacle:
    if mesh is not None:
        return Obstacle.from_mesh(id, mesh)
    return Obstacle(id, tuple(pieces), Pose.identity())


__all__ = [
    "ApproachCheck",
    "Obstacle",
    "approach_poses",
    "check_approach",
    "collision_filter",
    "gripper_hits",
    "object_obstacle",
    "open_width",
    "scene_obstacles",
]
