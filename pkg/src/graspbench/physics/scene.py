"""
Scene model: bodies, joints and the world state that a backend advances.

Everything here is an immutable value. Joint children are driven kinematically by
their joint coordinate:

    child = parent ∘ J(q − q_initial) ∘ rest,   rest = parent_initial⁻¹ ∘ child_initial

where J rotates about the joint axis through the anchor (hinge) or translates along
the axis (slide), both expressed in the parent frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import SceneError
from ..geometry.bvh import Aabb
from ..geometry.convex import ConvexPiece, pieces_aabb
from ..geometry.mesh import TriangleMesh
from ..geometry.transforms import Pose, axis_angle_quat


DEFAULT_GRAVITY = (0.0, 0.0, -9.81)
MOBILITIES = ("fixed", "free")
JOINT_KINDS = ("hinge", "slide")


def _vec3(value: Sequence[float], what: str) -> np.ndarray:
    v = np.array(value, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise SceneError(f"{what}: non-finite value {v.tolist()}")
    v.setflags(write=False)
    return v


def box_inertia(mass: float, extent: np.ndarray) -> np.ndarray:
    x, y, z = (float(e) for e in extent)
    return mass / 12.0 * np.diag([y * y + z * z, x * x + z * z, x * x + y * y])


@dataclass(frozen=True, eq=False)
class BodySpec:
    id: str
    mobility: str
    colliders: Tuple[ConvexPiece, ...]
    mass: float = 1.0
    inertia: Optional[np.ndarray] = None
    friction: float = 0.8
    initial_pose: Pose = field(default_factory=Pose.identity)
    category: Optional[str] = None
    mesh: Optional[TriangleMesh] = None
    contact_preload: float = 0.0
    initial_velocity: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise SceneError("body id must be nonempty")
        if self.mobility not in MOBILITIES:
            raise SceneError(f"body '{self.id}': mobility must be one of {MOBILITIES}, got {self.mobility!r}")
        object.__setattr__(self, "colliders", tuple(self.colliders))
        if not self.colliders:
            raise SceneError(f"body '{self.id}': at least one collider is required")
        if not math.isfinite(self.friction) or self.friction < 0:
            raise SceneError(f"body '{self.id}': friction must be finite and >= 0")
        if not math.isfinite(self.contact_preload) or self.contact_preload < 0:
            raise SceneError(f"body '{self.id}': contact_preload must be finite and >= 0")
        if self.mobility == "free":
            if not math.isfinite(self.mass) or self.mass <= 0:
                raise SceneError(f"body '{self.id}': free bodies need a finite mass > 0 (got {self.mass})")
            inertia = self.inertia
            if inertia is None:
                inertia = box_inertia(self.mass, self.local_aabb.extent)
            inertia = np.array(inertia, dtype=float).reshape(3, 3)
            if not np.all(np.isfinite(inertia)):
                raise SceneError(f"body '{self.id}': inertia must be finite")
            if not np.allclose(inertia, inertia.T, atol=1e-12) or np.min(np.linalg.eigvalsh(inertia)) <= 0:
                raise SceneError(f"body '{self.id}': inertia must be symmetric positive definite")
            inertia.setflags(write=False)
            object.__setattr__(self, "inertia", inertia)
        if self.initial_velocity is not None:
            lin, ang = self.initial_velocity
            object.__setattr__(self, "initial_velocity",
                               (_vec3(lin, f"body '{self.id}' velocity"), _vec3(ang, f"body '{self.id}' velocity")))

    @property
    def is_free(self) -> bool:
        return self.mobility == "free"

    @cached_property
    def local_aabb(self) -> Aabb:
        return pieces_aabb(self.colliders, Pose.identity())

    def world_aabb(self, pose: Optional[Pose] = None) -> Aabb:
        return pieces_aabb(self.colliders, pose or self.initial_pose)

    def with_pose(self, pose: Pose) -> "BodySpec":
        return replace(self, initial_pose=pose)


@dataclass(frozen=True, eq=False)
class JointSpec:
    id: str
    parent: str
    child: str
    kind: str
    axis: np.ndarray
    anchor: np.ndarray
    range: Tuple[float, float]
    initial: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in JOINT_KINDS:
            raise SceneError(f"joint '{self.id}': kind must be one of {JOINT_KINDS}, got {self.kind!r}")
        axis = np.array(self.axis, dtype=float).reshape(3)
        norm = float(np.linalg.norm(axis))
        if not math.isfinite(norm) or norm < 1e-9:
            raise SceneError(f"joint '{self.id}': axis must be nonzero")
        axis = axis / norm
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "anchor", _vec3(self.anchor, f"joint '{self.id}' anchor"))
        lo, hi = (float(x) for x in self.range)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise SceneError(f"joint '{self.id}': range needs lo < hi (got [{lo}, {hi}])")
        object.__setattr__(self, "range", (lo, hi))
        q0 = min(max(0.0, lo), hi) if self.initial is None else float(self.initial)
        if not lo <= q0 <= hi:
            raise SceneError(f"joint '{self.id}': initial position {q0} outside [{lo}, {hi}]")
        object.__setattr__(self, "initial", q0)
        if self.parent == self.child:
            raise SceneError(f"joint '{self.id}': parent and child must differ")

    @property
    def lo(self) -> float:
        return self.range[0]

    @property
    def hi(self) -> float:
        return self.range[1]

    def fraction(self, q: float) -> float:
        return (q - self.lo) / (self.hi - self.lo)

    def position_at(self, fraction: float) -> float:
        return self.lo + fraction * (self.hi - self.lo)

    def clamp(self, q: float) -> float:
        return min(max(q, self.lo), self.hi)

    def motion(self, delta: float) -> Pose:
        """J(delta) in the parent frame."""
        if self.kind == "slide":
            return Pose(self.axis * delta)
        quat = axis_angle_quat(self.axis, delta)
        rot = Pose(np.zeros(3), quat)
        return Pose(self.anchor - rot.apply(self.anchor), quat)


@dataclass(frozen=True, eq=False)
class SceneGraph:
    bodies: Tuple[BodySpec, ...]
    joints: Tuple[JointSpec, ...] = ()
    gravity: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRAVITY))

    def __post_init__(self) -> None:
        object.__setattr__(self, "bodies", tuple(self.bodies))
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "gravity", _vec3(self.gravity, "gravity"))
        seen = set()
        for b in self.bodies:
            if b.id in seen:
                raise SceneError(f"duplicate body id '{b.id}'")
            seen.add(b.id)
        jseen = set()
        parent_of: Dict[str, str] = {}
        for j in self.joints:
            if j.id in jseen:
                raise SceneError(f"duplicate joint id '{j.id}'")
            jseen.add(j.id)
            for end in (j.parent, j.child):
                if end not in seen:
                    raise SceneError(f"joint '{j.id}': unknown body '{end}'")
            if j.child in parent_of:
                raise SceneError(f"joint '{j.id}': body '{j.child}' already has a parent joint")
            parent_of[j.child] = j.parent
        for start in parent_of:
            node, hops = start, 0
            while node in parent_of:
                node = parent_of[node]
                hops += 1
                if node == start or hops > len(parent_of):
                    raise SceneError(f"joint cycle through body '{start}'")

    # ---- lookup ----
    @cached_property
    def body_index(self) -> Mapping[str, int]:
        return MappingProxyType({b.id: i for i, b in enumerate(self.bodies)})

    @cached_property
    def joint_index(self) -> Mapping[str, int]:
        return MappingProxyType({j.id: i for i, j in enumerate(self.joints)})

    def has_body(self, body_id: str) -> bool:
        return body_id in self.body_index

    def body(self, body_id: str) -> BodySpec:
        try:
            return self.bodies[self.body_index[body_id]]
        except KeyError:
            raise SceneError(f"unknown body '{body_id}'") from None

    def joint(self, joint_id: str) -> JointSpec:
        try:
            return self.joints[self.joint_index[joint_id]]
        except KeyError:
            raise SceneError(f"unknown joint '{joint_id}'") from None

    @cached_property
    def parent_joint(self) -> Mapping[str, JointSpec]:
        return MappingProxyType({j.child: j for j in self.joints})

    @cached_property
    def joint_order(self) -> Tuple[JointSpec, ...]:
        """Joints sorted so that every parent is placed before its children."""
        depth: Dict[str, int] = {}

        def d(body: str) -> int:
            if body not in depth:
                j = self.parent_joint.get(body)
                depth[body] = 0 if j is None else d(j.parent) + 1
            return depth[body]

        return tuple(sorted(self.joints, key=lambda j: (d(j.child), self.joint_index[j.id])))

    @cached_property
    def articulation_groups(self) -> Mapping[str, FrozenSet[str]]:
        """Body id -> all bodies connected to it through joints (itself included)."""
        parent = {b.id: b.id for b in self.bodies}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for j in self.joints:
            ra, rb = find(j.parent), find(j.child)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: Dict[str, set] = {}
        for b in self.bodies:
            groups.setdefault(find(b.id), set()).add(b.id)
        return MappingProxyType({b.id: frozenset(groups[find(b.id)]) for b in self.bodies})

    def same_articulation(self, a: str, b: str) -> bool:
        return b in self.articulation_groups[a]

    def is_articulated(self, body_id: str) -> bool:
        return len(self.articulation_groups[body_id]) > 1

    def subtree(self, joint_id: str) -> Tuple[str, ...]:
        """Bodies moved by a joint: its child and everything below it, in scene order."""
        j = self.joint(joint_id)
        members = {j.child}
        changed = True
        while changed:
            changed = False
            for other in self.joints:
                if other.parent in members and other.child not in members:
                    members.add(other.child)
                    changed = True
        return tuple(b.id for b in self.bodies if b.id in members)

    def removable(self, body_id: str) -> bool:
        """Free, non-articulated bodies are the only ones QA may remove."""
        return self.body(body_id).is_free and not self.is_articulated(body_id)

    def free_bodies(self) -> Tuple[BodySpec, ...]:
        return tuple(b for b in self.bodies if b.is_free and b.id not in self.parent_joint)

    def root_of(self, body_id: str) -> str:
        node = body_id
        while node in self.parent_joint:
            node = self.parent_joint[node].parent
        return node

    # ---- poses ----
    def rest_offset(self, joint: JointSpec) -> Pose:
        return self.body(joint.parent).initial_pose.inverse().compose(self.body(joint.child).initial_pose)

    def child_pose(self, joint: JointSpec, parent_pose: Pose, q: float) -> Pose:
        return parent_pose.compose(joint.motion(q - joint.initial)).compose(self.rest_offset(joint))

    def posed(self, poses: Mapping[str, Pose], joint_q: Mapping[str, float]) -> Dict[str, Pose]:
        """Recompute every joint child pose from its parent pose and joint coordinate."""
        out = dict(poses)
        for j in self.joint_order:
            out[j.child] = self.child_pose(j, out[j.parent], joint_q.get(j.id, j.initial))
        return out

    # ---- derived scenes ----
    def with_poses(self, poses: Mapping[str, Pose]) -> "SceneGraph":
        bodies = tuple(b.with_pose(poses[b.id]) if b.id in poses else b for b in self.bodies)
        return replace(self, bodies=bodies)

    def with_joint_positions(self, joint_q: Mapping[str, float]) -> "SceneGraph":
        joints = tuple(replace(j, initial=j.clamp(joint_q[j.id])) if j.id in joint_q else j for j in self.joints)
        return replace(self, joints=joints)

    def without_bodies(self, ids: Iterable[str]) -> "SceneGraph":
        drop = set(ids)
        for i in drop:
            self.body(i)
        joints = tuple(j for j in self.joints if j.parent not in drop and j.child not in drop)
        return replace(self, bodies=tuple(b for b in self.bodies if b.id not in drop), joints=joints)

    def with_body(self, body: BodySpec) -> "SceneGraph":
        if self.has_body(body.id):
            bodies = tuple(body if b.id == body.id else b for b in self.bodies)
        else:
            bodies = self.bodies + (body,)
        return replace(self, bodies=bodies)

    def fragment(self, body_ids: Iterable[str]) -> "SceneGraph":
        keep = set(body_ids)
        joints = tuple(j for j in self.joints if j.parent in keep and j.child in keep)
        return replace(self, bodies=tuple(b for b in self.bodies if b.id in keep), joints=joints)


@dataclass(frozen=True, eq=False)
class ContactRecord:
    body_a: str
    body_b: str
    point: np.ndarray
    normal: np.ndarray  # from a to b
    impulse: np.ndarray  # impulse applied to b (a receives the opposite)
    depth: float = 0.0  # deepest point of the pair, negative when only within the margin


def _freeze_map(m: Mapping) -> Mapping:
    return MappingProxyType(dict(m))


@dataclass(frozen=True, eq=False)
class WorldState:
    """Per-body pose and velocities, per-joint position and velocity, plus last-step contacts."""

    time: float
    poses: Mapping[str, Pose]
    linear: Mapping[str, np.ndarray]
    angular: Mapping[str, np.ndarray]
    joint_q: Mapping[str, float]
    joint_qd: Mapping[str, float]
    sleep: Mapping[str, float] = field(default_factory=dict)
    contacts: Tuple[ContactRecord, ...] = ()

    def __post_init__(self) -> None:
        for name in ("poses", "linear", "angular", "joint_q", "joint_qd", "sleep"):
            object.__setattr__(self, name, _freeze_map(getattr(self, name)))
        object.__setattr__(self, "contacts", tuple(self.contacts))

    @classmethod
    def initial(cls, scene: SceneGraph) -> "WorldState":
        poses = {b.id: b.initial_pose for b in scene.bodies}
        joint_q = {j.id: float(j.initial) for j in scene.joints}
        poses = scene.posed(poses, joint_q)
        lin = {}
        ang = {}
        for b in scene.bodies:
            if b.initial_velocity is not None:
                lin[b.id] = np.array(b.initial_velocity[0])
                ang[b.id] = np.array(b.initial_velocity[1])
            else:
                lin[b.id] = np.zeros(3)
                ang[b.id] = np.zeros(3)
        return cls(0.0, poses, lin, ang, joint_q, {j.id: 0.0 for j in scene.joints},
                   {b.id: 0.0 for b in scene.bodies}, ())

    def pose(self, body_id: str) -> Pose:
        try:
            return self.poses[body_id]
        except KeyError:
            raise SceneError(f"unknown body '{body_id}'") from None

    def with_velocity(self, body_id: str, linear: Sequence[float],
                      angular: Sequence[float] = (0.0, 0.0, 0.0)) -> "WorldState":
        lin = dict(self.linear)
        ang = dict(self.angular)
        lin[body_id] = np.array(linear, dtype=float)
        ang[body_id] = np.array(angular, dtype=float)
        sleep = dict(self.sleep)
        sleep[body_id] = 0.0
        return replace(self, linear=lin, angular=ang, sleep=sleep)

    def with_pose(self, body_id: str, pose: Pose) -> "WorldState":
        poses = dict(self.poses)
        poses[body_id] = pose
        return replace(self, poses=poses)

    def with_joint(self, joint_id: str, q: float, qd: float = 0.0) -> "WorldState":
        jq = dict(self.joint_q)
        jqd = dict(self.joint_qd)
        jq[joint_id] = float(q)
        jqd[joint_id] = float(qd)
        return replace(self, joint_q=jq, joint_qd=jqd)

    def awake(self, body_ids: Optional[Iterable[str]] = None) -> "WorldState":
        sleep = dict(self.sleep)
        for k in (body_ids if body_ids is not None else list(sleep)):
            sleep[k] = 0.0
        return replace(self, sleep=sleep)

    def __eq__(self, other: object) -> bool:
        """Bitwise equality of every stored number."""
        if not isinstance(other, WorldState):
            return NotImplemented
        if self.time != other.time:
            return False
        for name in ("poses", "linear", "angular", "joint_q", "joint_qd", "sleep"):
            a, b = getattr(self, name), getattr(other, name)
            if list(a.keys()) != list(b.keys()):
                return False
            for k in a:
                va, vb = a[k], b[k]
                if isinstance(va, Pose):
                    if not va == vb:
                        return False
                elif not np.array_equal(np.asarray(va), np.asarray(vb)):
                    return False
        if len(self.contacts) != len(other.contacts):
            return False
        for ca, cb in zip(self.contacts, other.contacts):
            if (ca.body_a, ca.body_b) != (cb.body_a, cb.body_b):
                return False
            if not (np.array_equal(ca.point, cb.point) and np.array_equal(ca.impulse, cb.impulse)):
                return False
        return True

    __hash__ = None  # type: ignore[assignment]


def open_fraction(scene: SceneGraph, state: WorldState, joint_id: str) -> float:
    j = scene.joint(joint_id)
    return j.fraction(state.joint_q.get(joint_id, j.initial))


def body_aabbs(scene: SceneGraph, poses: Mapping[str, Pose]) -> Dict[str, Aabb]:
    return {b.id: b.world_aabb(poses[b.id]) for b in scene.bodies}


def settled_scene(scene: SceneGraph, state: WorldState) -> SceneGraph:
    """The scene with initial poses and joint positions taken from a state."""
    return scene.with_joint_positions(state.joint_q).with_poses(state.poses)


def body_order(scene: SceneGraph) -> List[str]:
    return [b.id for b in scene.bodies]
