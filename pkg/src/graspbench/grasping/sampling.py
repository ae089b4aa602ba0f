"""
Antipodal contact sampling and grasp pose construction.

Contacts are found by casting a ray from each surface sample into the object along
its inward normal; the exit point closes the pair. Both contact normals must lie
inside the friction cone around the closing line.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import PreconditionError, ValidationError
from ..geometry.convex import segment_hits
from ..geometry.mesh import TriangleMesh, ray_cast_many, surface_sample
from ..geometry.shapes import pieces_mesh
from ..geometry.transforms import Pose, orthonormal_basis
from ..physics.scene import JointSpec, SceneGraph
from .gripper import GripperSpec


logger = logging.getLogger(__name__)

MIN_WIDTH = 1e-6


@dataclass(frozen=True, eq=False)
class ContactPair:
    p1: np.ndarray
    p2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    pad_uv: Tuple[float, float] = (0.0, 0.0)

    @property
    def width(self) -> float:
        return float(np.linalg.norm(self.p2 - self.p1))

    @property
    def axis(self) -> np.ndarray:
        return (self.p2 - self.p1) / self.width

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p1 + self.p2)

    def at_pad(self, u: float, v: float) -> "ContactPair":
        return replace(self, pad_uv=(float(u), float(v)))


@dataclass(frozen=True)
class GraspFlags:
    """None = not checked yet."""

    collision_free_isolated: Optional[bool] = None
    robust: Optional[bool] = None
    in_situ_ok: Optional[bool] = None

    def as_dict(self) -> dict:
        return {"collision_free_isolated": self.collision_free_isolated,
                "robust": self.robust, "in_situ_ok": self.in_situ_ok}


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    pose: Pose
    contacts: ContactPair
    roll_index: int = 0
    bias_score: float = 0.0
    flags: GraspFlags = field(default_factory=GraspFlags)

    @property
    def width(self) -> float:
        return self.contacts.width

    def with_flags(self, **kw: Optional[bool]) -> "GraspCandidate":
        return replace(self, flags=replace(self.flags, **kw))


@dataclass(frozen=True, eq=False)
class ArticulatedTarget:
    object: SceneGraph
    joint: JointSpec
    leaf_body: str

    def __post_init__(self) -> None:
        self.object.joint(self.joint.id)
        if self.leaf_body not in self.object.subtree(self.joint.id):
            raise PreconditionError(f"leaf body '{self.leaf_body}' is not moved by joint '{self.joint.id}'")

    def poses(self) -> dict:
        scene = self.object
        return scene.posed({b.id: b.initial_pose for b in scene.bodies}, {})


def _check_cone(friction_angle: float) -> None:
    if not 0.0 < friction_angle < math.pi / 2.0:
        raise ValidationError(f"friction_angle must be in (0, pi/2) rad, got {friction_angle}")


def antipodal_ok(p1: np.ndarray, p2: np.ndarray, n1: np.ndarray, n2: np.ndarray,
                 friction_angle: float, max_opening: float) -> bool:
    """Independent re-check of the width bound and both cone conditions."""
    d = np.asarray(p2, dtype=float) - np.asarray(p1, dtype=float)
    w = float(np.linalg.norm(d))
    if not MIN_WIDTH < w <= max_opening:
        return False
    d = d / w
    cos_fa = math.cos(friction_angle)
    return float(np.dot(n1, -d)) >= cos_fa - 1e-12 and float(np.dot(n2, d)) >= cos_fa - 1e-12


def sample_antipodal(mesh: TriangleMesh, gripper: GripperSpec, n: int, seed: int,
                     friction_angle: float = math.radians(15.0)) -> List[ContactPair]:
    """Antipodal pairs from `n` surface samples, in sample order."""
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    _check_cone(friction_angle)
    samples = surface_sample(mesh, n, seed)
    return _pairs_from_samples(mesh, samples.points, samples.normals, gripper, friction_angle)


def _pairs_from_samples(mesh: TriangleMesh, points: np.ndarray, normals: np.ndarray,
                        gripper: GripperSpec, friction_angle: float) -> List[ContactPair]:
    dist, tri = ray_cast_many(mesh, points, -normals)
    hit = tri >= 0
    p2 = points - np.where(hit, dist, 0.0)[:, None] * normals
    n2 = np.where(hit[:, None], mesh.normals[np.where(hit, tri, 0)], 0.0)
    d = p2 - points
    width = np.linalg.norm(d, axis=1)
    ok = hit & (width > MIN_WIDTH) & (width <= gripper.max_opening)
    axis = np.where(ok[:, None], d / np.where(width > 0, width, 1.0)[:, None], 0.0)
    cos_fa = math.cos(friction_angle)
    ok &= np.einsum("ij,ij->i", normals, -axis) >= cos_fa - 1e-12
    ok &= np.einsum("ij,ij->i", n2, axis) >= cos_fa - 1e-12
    pairs = [ContactPair(points[i].copy(), p2[i].copy(), normals[i].copy(), n2[i].copy())
             for i in np.flatnonzero(ok)]
    logger.debug("antipodal sampling: %d of %d samples produced pairs", len(pairs), len(points))
    return pairs


def sample_articulated(target: ArticulatedTarget, gripper: GripperSpec, n: int, seed: int,
                       friction_angle: float = math.radians(15.0)) -> List[ContactPair]:
    """
    Antipodal pairs restricted to the leaf body (handle, knob), in the scene frame of
    the target. Pairs whose closing segment touches any other body of the object are
    dropped.
    """
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    _check_cone(friction_angle)
    scene = target.object
    leaf = scene.body(target.leaf_body)
    poses = target.poses()
    if leaf.mesh is not None:
        mesh = leaf.mesh
    else:
        try:
            mesh = pieces_mesh(leaf.colliders)
        except ValidationError:
            raise PreconditionError(f"leaf body '{leaf.id}' has no surface mesh") from None
    mesh = mesh.transformed(poses[leaf.id])
    samples = surface_sample(mesh, n, seed)
    pairs = _pairs_from_samples(mesh, samples.points, samples.normals, gripper, friction_angle)
    others = [b for b in scene.bodies if b.id != leaf.id]
    kept = [p for p in pairs
            if not any(segment_hits(p.p1, p.p2, b.colliders, poses[b.id]) for b in others)]
    logger.debug("articulated sampling on '%s': %d pairs, %d clear of non-leaf geometry",
                 leaf.id, len(pairs), len(kept))
    return kept


def bias_score(pad_uv: Sequence[float], gripper: GripperSpec, thin: bool) -> float:
    hw, hh = gripper.pad_half
    u, v = float(pad_uv[0]), float(pad_uv[1])
    across = 1.0 - (u / hw) ** 2
    if thin:
        along = 1.0 - ((hh - v) / gripper.pad_height) ** 2
    else:
        along = 1.0 - (v / hh) ** 2
    return float(min(1.0, max(0.0, across * along)))


def bias_contacts(pairs: Sequence[ContactPair], gripper: GripperSpec, object_extent: Sequence[float],
                  thin_threshold: float = 0.012) -> List[Tuple[ContactPair, float]]:
    """Score each pair by where it lands on the pad; sorted best first (stable)."""
    thin = float(np.min(object_extent)) < thin_threshold
    scored = [(p, bias_score(p.pad_uv, gripper, thin)) for p in pairs]
    return sorted(scored, key=lambda ps: -ps[1])


def pad_placements(pair: ContactPair, gripper: GripperSpec, depth_samples: int) -> List[ContactPair]:
    """The pair placed at `depth_samples` pad depths from the centre (v=0) to the distal edge."""
    if depth_samples < 1:
        raise ValidationError("pad_depth_samples must be >= 1")
    if depth_samples == 1:
        return [pair.at_pad(0.0, 0.0)]
    _, hh = gripper.pad_half
    return [pair.at_pad(0.0, float(v)) for v in np.linspace(0.0, hh, depth_samples)]


def grasp_poses_from_pair(pair: ContactPair, gripper: GripperSpec, rolls: int,
                          bias: float = 0.0) -> List[GraspCandidate]:
    """
    Gripper poses whose closing axis runs p1 -> p2 with both contacts at `pair.pad_uv`,
    `rolls` of them evenly spaced about the closing axis.
    """
    if rolls < 1:
        raise ValidationError(f"rolls must be >= 1, got {rolls}")
    if pair.width < MIN_WIDTH:
        raise ValidationError(f"degenerate contact pair (width {pair.width:.3g} m)")
    x = pair.axis
    y0, z0 = orthonormal_basis(x)
    u, v = pair.pad_uv
    out = []
    for k in range(rolls):
        a = 2.0 * math.pi * k / rolls
        y = math.cos(a) * y0 + math.sin(a) * z0
        z = np.cross(x, y)
        r = np.stack([x, y, z], axis=1)
        origin = pair.midpoint - r @ np.array([0.0, u, v])
        out.append(GraspCandidate(Pose.from_rotation_matrix(r, origin), pair, k, bias))
    return out


def approach_direction(pose: Pose, up: Sequence[float] = (0.0, 0.0, 1.0), cone_deg: float = 45.0) -> str:
    """'top' when approaching downward within the cone, 'bottom' when upward, else 'side'."""
    approach = pose.matrix[:, 2]
    c = float(np.dot(approach, np.asarray(up, dtype=float)))
    limit = math.cos(math.radians(cone_deg))
    if c <= -limit:
        return "top"
    if c >= limit:
        return "bottom"
    return "side"
