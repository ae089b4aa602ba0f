"""
Grasp verification.

- verify_rigid: the object is held between two force-controlled finger pads that
  are driven kinematically through a sequence of perturbations (move out with a
  cosine profile, hold, move back). The grasp fails on slip or lost contact.
- verify_articulated: the joint is swept closed, open, closed with the gripper
  attached to find obstacles, then the gripper is driven along the handle
  trajectory and must keep both pads on the handle over the minimum fraction.
- in_situ_test: approach checks in the scene, then a lift or an articulation.
- wrench_slip_oracle: two point contacts, Coulomb friction, analytic verdict.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..bench.stats import credible_interval
from ..config import Settings, require_fraction, require_positive
from ..errors import PreconditionError, ValidationError
from ..geometry.convex import ConvexPiece, collide, distance_between
from ..geometry.transforms import Pose, rotvec_to_quat
from ..physics.backend import ActuationSpan, PhysicsBackend, actuation_span
from ..physics.scene import BodySpec, SceneGraph, WorldState, settled_scene
from .filtering import Obstacle, check_approach, scene_obstacles
from .gripper import GripperSpec, default_gripper
from .sampling import ArticulatedTarget, GraspCandidate


logger = logging.getLogger(__name__)

FAILURE_REASONS = (
    "slip",
    "lift_too_large_object",
    "vertical_clearance",
    "trajectory_collision",
    "lifts_instead_of_actuating",
    "articulation_path_collision",
    "obstacle_blocks",
    "misalignment",
    "none",
)

PAD_LEFT = "gripper_pad_left"
PAD_RIGHT = "gripper_pad_right"
LIFT_PATH_SAMPLES = 20
ON_LEAF_TOLERANCE = 0.002
ARTICULATION_SAMPLES = 24


@dataclass(frozen=True)
class VerifyConfig:
    closing_force: float = 40.0
    slip_threshold: float = 0.005
    linear_offset: float = 0.01
    angular_offset_deg: float = 10.0
    hold_duration: float = 0.25
    move_duration: float = 0.25
    lift_height: float = 0.10
    lift_min: float = 0.05
    actuation_min_fraction: float = 0.70
    actuation_force: float = 10.0
    contact_tolerance: float = 0.001
    clearance: float = 0.005
    trajectory_samples: int = 10

    @classmethod
    def from_settings(cls, settings: Settings) -> "VerifyConfig":
        s = "verify"
        g = settings.getfloat
        return cls(
            closing_force=require_positive(s, "closing_force", g(s, "closing_force")),
            slip_threshold=require_positive(s, "slip_threshold", g(s, "slip_threshold")),
            linear_offset=g(s, "linear_offset"),
            angular_offset_deg=g(s, "angular_offset_deg"),
            hold_duration=require_positive(s, "hold_duration", g(s, "hold_duration")),
            move_duration=require_positive(s, "move_duration", g(s, "move_duration")),
            lift_height=require_positive(s, "lift_height", g(s, "lift_height")),
            lift_min=require_positive(s, "lift_min", g(s, "lift_min")),
            actuation_min_fraction=require_fraction(s, "actuation_min_fraction", g(s, "actuation_min_fraction")),
            actuation_force=require_positive(s, "actuation_force", g(s, "actuation_force")),
            contact_tolerance=g(s, "contact_tolerance"),
            clearance=settings.getfloat("grasp", "clearance"),
            trajectory_samples=settings.getint("grasp", "trajectory_samples"),
        )


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """Offsets are in the gripper frame; angular offsets are rotation vectors about the TCP."""

    linear_offsets: Tuple[np.ndarray, ...]
    angular_offsets: Tuple[np.ndarray, ...]
    hold_duration: float = 0.25
    move_duration: float = 0.25

    def __post_init__(self) -> None:
        lin = tuple(np.asarray(v, dtype=float).reshape(3) for v in self.linear_offsets)
        ang = tuple(np.asarray(v, dtype=float).reshape(3) for v in self.angular_offsets)
        if not lin or not ang:
            raise ValidationError("perturbation lists must be nonempty")
        if not self.hold_duration > 0 or not self.move_duration > 0:
            raise ValidationError("perturbation durations must be > 0")
        object.__setattr__(self, "linear_offsets", lin)
        object.__setattr__(self, "angular_offsets", ang)

    @classmethod
    def default(cls, config: Optional[VerifyConfig] = None) -> "PerturbationSpec":
        c = config or VerifyConfig()
        eye = np.eye(3)
        ang = math.radians(c.angular_offset_deg)
        return cls(tuple(s * c.linear_offset * eye[k] for k in range(3) for s in (1.0, -1.0)),
                   tuple(s * ang * eye[k] for k in range(3) for s in (1.0, -1.0)),
                   c.hold_duration, c.move_duration)

    def moves(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(linear, angular) offset of every perturbation, in application order."""
        z = np.zeros(3)
        return [(v, z) for v in self.linear_offsets] + [(z, w) for w in self.angular_offsets]


@dataclass(frozen=True)
class VerificationResult:
    grasp_id: Any
    rigid_robust: Optional[bool] = None
    actuation_ok: Optional[bool] = None
    in_situ: Mapping[str, bool] = field(default_factory=dict)
    failure_reason: str = "none"
    detail: str = ""

    def __post_init__(self) -> None:
        if self.failure_reason not in FAILURE_REASONS:
            raise ValidationError(f"unknown failure reason {self.failure_reason!r}")
        if self.rigid_robust is False and self.failure_reason == "none":
            raise ValidationError("a failed rigid verification needs a failure reason")

    @property
    def success(self) -> bool:
        return self.failure_reason == "none"

    def as_dict(self) -> Dict[str, Any]:
        return {"grasp_id": self.grasp_id, "rigid_robust": self.rigid_robust,
                "actuation_ok": self.actuation_ok, "in_situ": dict(self.in_situ),
                "failure_reason": self.failure_reason}


# ---------- Analytic oracle ----------

def _profile(t: float, period: float) -> Tuple[float, float]:
    """Cosine move s(t) = (1 - cos(pi t / T)) / 2 and its second derivative."""
    w = math.pi / period
    return 0.5 * (1.0 - math.cos(w * t)), 0.5 * w * w * math.cos(w * t)


def wrench_slip_oracle(grasp: GraspCandidate, mass: float, mu: float, closing_force: float = 40.0,
                       perturb: Optional[PerturbationSpec] = None,
                       gravity: Sequence[float] = (0.0, 0.0, -9.81),
                       object_pose: Optional[Pose] = None, instants: int = 33) -> bool:
    """
    True when gravity plus the perturbation accelerations stay inside both friction
    cones. Loads along the closing axis are taken by the pad normals; the
    tangential part must not exceed 2 * mu * closing_force. Torsion is ignored.
    """
    if mass < 0 or mu < 0 or closing_force < 0:
        raise ValidationError("mass, mu and closing_force must be >= 0")
    capacity = 2.0 * mu * closing_force
    world = (object_pose or Pose.identity()).compose(grasp.pose)
    r0 = world.matrix
    g = np.asarray(gravity, dtype=float)

    def load(acc_local: np.ndarray, rot: np.ndarray) -> float:
        g_local = (rot @ r0).T @ g
        f = mass * (acc_local - g_local)
        return float(math.hypot(f[1], f[2]))

    worst = load(np.zeros(3), np.eye(3))
    if perturb is not None:
        period = perturb.move_duration
        for lin, ang in perturb.moves():
            for k in range(instants):
                s, dds = _profile(period * k / (instants - 1), period)
                rot = Pose(np.zeros(3), rotvec_to_quat(ang * s)).matrix
                rot_world = r0 @ rot @ r0.T
                worst = max(worst, load(lin * dds, rot_world), load(-lin * dds, rot_world))
    return worst <= capacity + 1e-12


# ---------- Simulation helpers ----------

def _pad_bodies(gripper: GripperSpec, pose: Pose, width: float, force: float,
                friction: float, squeeze: float) -> Tuple[BodySpec, BodySpec]:
    left, right = gripper.finger_pieces(max(1e-4, width - squeeze))
    return tuple(BodySpec(name, "fixed", (piece,), friction=friction, initial_pose=pose, contact_preload=force)
                 for name, piece in ((PAD_LEFT, left), (PAD_RIGHT, right)))  # type: ignore[return-value]


def _touching(state: WorldState, a: str, b: str, tol: float) -> bool:
    for c in state.contacts:
        if {c.body_a, c.body_b} == {a, b} and c.depth > -tol:
            return True
    return False


def _relative(state: WorldState, object_id: str) -> Pose:
    return state.pose(PAD_LEFT).inverse().compose(state.pose(object_id))


class _PadDriver:
    """Steps the scene while imposing pad velocities; watches contact and slip."""

    def __init__(self, backend: PhysicsBackend, scene: SceneGraph, state: WorldState,
                 object_id: str, config: VerifyConfig) -> None:
        self.backend = backend
        self.scene = scene
        self.state = state
        self.object_id = object_id
        self.config = config
        self.dt = float(getattr(getattr(backend, "config", None), "dt", 0.002))
        self.rel0 = _relative(state, object_id)
        self.failure: Optional[str] = None

    def run(self, duration: float, velocity: Callable[[float], Tuple[np.ndarray, np.ndarray]],
            check: bool = True) -> bool:
        n = max(1, int(round(duration / self.dt)))
        for k in range(n):
            v, w = velocity(k * self.dt)
            s = self.state.awake([self.object_id])
            s = s.with_velocity(PAD_LEFT, v, w).with_velocity(PAD_RIGHT, v, w)
            self.state = self.backend.step(self.scene, s, self.dt)
            if check and not self._holding():
                return False
        self.state = self.state.with_velocity(PAD_LEFT, np.zeros(3)).with_velocity(PAD_RIGHT, np.zeros(3))
        return True

    def _holding(self) -> bool:
        tol = self.config.contact_tolerance
        for pad in (PAD_LEFT, PAD_RIGHT):
            if not _touching(self.state, pad, self.object_id, tol):
                self.failure = f"contact lost on {pad} at t={self.state.time:.3f}"
                return False
        moved = float(np.linalg.norm(_relative(self.state, self.object_id).translation - self.rel0.translation))
        if moved > self.config.slip_threshold:
            self.failure = f"slipped {moved * 1000:.1f} mm at t={self.state.time:.3f}"
            return False
        return True

    def move(self, lin_world: np.ndarray, ang_world: np.ndarray, period: float) -> bool:
        """Cosine out-move by (lin, ang); the step velocity integrates the profile exactly."""
        n = max(1, int(round(period / self.dt)))
        total = n * self.dt

        def vel(t: float) -> Tuple[np.ndarray, np.ndarray]:
            s0, _ = _profile(t, total)
            s1, _ = _profile(t + self.dt, total)
            rate = (s1 - s0) / self.dt
            return lin_world * rate, ang_world * rate

        return self.run(total, vel)


def _still(_: float) -> Tuple[np.ndarray, np.ndarray]:
    return np.zeros(3), np.zeros(3)


def verify_rigid(grasp: GraspCandidate, obj: BodySpec, backend: PhysicsBackend,
                 perturb: Optional[PerturbationSpec] = None, gripper: Optional[GripperSpec] = None,
                 config: Optional[VerifyConfig] = None, grasp_id: Any = None) -> VerificationResult:
    """
    Hold `obj` (grasp pose in its body frame) in free space and apply every
    perturbation in turn; robust iff both pad contacts persist and the object moves
    less than slip_threshold relative to the gripper.
    """
    config = config or VerifyConfig()
    gripper = gripper or default_gripper()
    perturb = perturb or PerturbationSpec.default(config)
    if grasp.flags.collision_free_isolated is False:
        raise PreconditionError("grasp did not pass the isolated collision filter")
    if not obj.is_free:
        raise PreconditionError(f"object '{obj.id}' must be a free body")
    world = obj.initial_pose.compose(grasp.pose)
    pads = _pad_bodies(gripper, world, grasp.width, config.closing_force, obj.friction,
                       config.contact_tolerance)
    scene = SceneGraph((replace(obj, initial_velocity=None),) + pads)
    driver = _PadDriver(backend, scene, backend.initial_state(scene), obj.id, config)
    r = world.matrix
    ok = driver.run(perturb.hold_duration, _still)
    for lin, ang in perturb.moves():
        if not ok:
            break
        ok = (driver.move(r @ lin, r @ ang, perturb.move_duration)
              and driver.run(perturb.hold_duration, _still)
              and driver.move(-(r @ lin), -(r @ ang), perturb.move_duration))
    if ok:
        return VerificationResult(grasp_id, rigid_robust=True)
    logger.debug("grasp %s: %s", grasp_id, driver.failure)
    return VerificationResult(grasp_id, rigid_robust=False, failure_reason="slip", detail=driver.failure or "")


# ---------- Articulated ----------

def _on_body(grasp: GraspCandidate, body: BodySpec, pose: Pose) -> bool:
    for p in (grasp.contacts.p1, grasp.contacts.p2):
        probe = ConvexPiece.sphere(1e-4, Pose.from_translation(p))
        if distance_between((probe,), Pose.identity(), body.colliders, pose, ON_LEAF_TOLERANCE * 2) > ON_LEAF_TOLERANCE:
            return False
    return True


def _attach_gripper(scene: SceneGraph, leaf_id: str, leaf_pose: Pose, grasp_world: Pose,
                    gripper: GripperSpec, width: float) -> SceneGraph:
    leaf = scene.body(leaf_id)
    rel = leaf_pose.inverse().compose(grasp_world)
    extra = tuple(p.transformed(rel) for p in gripper.pieces(min(gripper.max_opening, width)))
    return scene.with_body(replace(leaf, colliders=leaf.colliders + extra))


def _handle_velocity(scene: SceneGraph, joint_id: str, poses: Mapping[str, Pose], point: np.ndarray) -> np.ndarray:
    j = scene.joint(joint_id)
    parent = poses[j.parent]
    axis = parent.apply_vector(j.axis)
    if j.kind == "slide":
        return axis
    return np.cross(axis, point - parent.apply(j.anchor))


def _tangential_share(grasp_world: Pose, velocity: np.ndarray) -> float:
    """Part of a unit pull along `velocity` that the pads must carry by friction."""
    speed = float(np.linalg.norm(velocity))
    if speed <= 1e-12:
        return 0.0
    local = grasp_world.matrix.T @ (velocity / speed)
    return math.hypot(local[1], local[2])


def _pads_hold(gripper: GripperSpec, grip: Pose, leaf: BodySpec, leaf_pose: Pose,
               tips: Tuple[np.ndarray, np.ndarray], tol: float) -> Optional[str]:
    """
    None while both pads still hold the leaf at the grasp contacts (world `tips`),
    otherwise what broke. The jaws are force controlled, so they re-close onto the
    contacts along the closing axis; the contacts must stay on the pad faces.
    """
    inv = grip.inverse()
    left, right = inv.apply(tips[0]), inv.apply(tips[1])
    opening = float(right[0] - left[0])
    if not 0.0 < opening <= gripper.max_opening:
        return f"opening {opening * 1000:.1f} mm outside the stroke"
    hu, hv = gripper.pad_half
    for pad, p in ((PAD_LEFT, left), (PAD_RIGHT, right)):
        if abs(p[1]) > hu + tol or abs(p[2]) > hv + tol:
            return f"contact left the face of {pad}"
    jaws = grip.compose(Pose.from_translation((0.5 * (left[0] + right[0]), 0.0, 0.0)))
    fingers = gripper.finger_pieces(max(1e-4, opening - tol))
    for pad, piece in zip((PAD_LEFT, PAD_RIGHT), fingers):
        q = collide((piece,), jaws, leaf.colliders, leaf_pose, max_separation=tol)
        if q.contact is None and q.separation is None:
            return f"contact lost on {pad}"
    return None


def _track_handle(scene: SceneGraph, state: WorldState, joint_id: str, leaf_id: str, grasp_world: Pose,
                  width: float, span: ActuationSpan, gripper: GripperSpec,
                  config: VerifyConfig) -> Tuple[Tuple[float, float, float], str]:
    """
    Drive the closed gripper along the handle trajectory through the three legs of
    `span`. The TCP follows the grasp point on the leaf and the gripper keeps its
    grasp orientation. Every sample checks both pad contacts; where the pull needs
    more tangential force than the pads' friction, the pads slide along the handle.
    Returns the fraction each leg reached with the handle held, and what ended the
    contact ("" if nothing did).
    """
    j = scene.joint(joint_id)
    leaf = scene.body(leaf_id)
    tol = config.contact_tolerance
    capacity = 2.0 * leaf.friction * config.closing_force

    def posed(q: float) -> Dict[str, Pose]:
        jq = dict(state.joint_q)
        jq[joint_id] = q
        return scene.posed(state.poses, jq)

    f = j.fraction(j.clamp(float(state.joint_q.get(joint_id, j.initial))))
    held = posed(j.position_at(f))[leaf_id].inverse().compose(grasp_world)
    half = np.array([0.5 * width, 0.0, 0.0])
    tips = (held.apply(-half), held.apply(half))
    prev = grasp_world.translation
    slid = 0.0
    reached: List[float] = []
    legs = (span.to_closed.reached_fraction, span.to_open.reached_fraction, span.back_closed.reached_fraction)
    for target in legs:
        start = f
        for k in range(1, ARTICULATION_SAMPLES + 1):
            fk = start + (target - start) * k / ARTICULATION_SAMPLES
            poses = posed(j.position_at(fk))
            leaf_pose = poses[leaf_id]
            tcp = leaf_pose.compose(held).translation
            grip = Pose(tcp, grasp_world.rotation)
            lost = _pads_hold(gripper, grip, leaf, leaf_pose, (leaf_pose.apply(tips[0]), leaf_pose.apply(tips[1])), tol)
            if lost is None:
                share = _tangential_share(grasp_world, _handle_velocity(scene, joint_id, poses, tcp))
                if config.actuation_force * share > capacity:
                    slid += float(np.linalg.norm(tcp - prev)) * share
                    if slid > config.slip_threshold:
                        lost = f"pads slid {slid * 1000:.1f} mm along the handle"
            prev = tcp
            if lost is not None:
                reached += [f] * (len(legs) - len(reached))
                return (reached[0], reached[1], reached[2]), f"{lost} at fraction {fk:.2f}"
            f = fk
        reached.append(f)
    return (reached[0], reached[1], reached[2]), ""


def _articulation_verdict(scene: SceneGraph, state: WorldState, joint_id: str, leaf_id: str,
                          grasp: GraspCandidate, grasp_world: Pose, backend: PhysicsBackend,
                          gripper: GripperSpec, config: VerifyConfig) -> Tuple[bool, str, str]:
    """(ok, failure_reason, detail) for actuating `joint_id` through the grasp."""
    attached = _attach_gripper(scene, leaf_id, state.pose(leaf_id), grasp_world, gripper, grasp.width)
    span = actuation_span(backend, attached, state, joint_id)
    if span.blocked_at_start:
        return False, "obstacle_blocks", f"blocked at start by {', '.join(span.blockers)}"
    need = config.actuation_min_fraction
    if span.opening_coverage < need or span.closing_coverage < need:
        return False, "articulation_path_collision", (
            f"coverage open {span.opening_coverage:.2f} close {span.closing_coverage:.2f}, "
            f"blockers {', '.join(span.blockers) or '-'}")
    root = scene.body(scene.root_of(leaf_id))
    if root.is_free:
        group = scene.articulation_groups[root.id]
        weight = sum(scene.body(b).mass for b in group if scene.body(b).is_free) * float(np.linalg.norm(scene.gravity))
        if weight < config.actuation_force:
            return False, "lifts_instead_of_actuating", f"object weight {weight:.2f} N below actuation force"
    share = config.actuation_force * _tangential_share(
        grasp_world, _handle_velocity(scene, joint_id, state.poses, grasp_world.translation))
    if share > 2.0 * scene.body(leaf_id).friction * config.closing_force:
        return False, "misalignment", f"friction share {share:.2f} N above capacity"
    (fa, fb, fc), lost = _track_handle(scene, state, joint_id, leaf_id, grasp_world, grasp.width, span,
                                       gripper, config)
    if lost and min(fb - fa, fb - fc) < need:
        return False, "misalignment", lost
    return True, "none", ""


def verify_articulated(grasp: GraspCandidate, target: ArticulatedTarget, backend: PhysicsBackend,
                       gripper: Optional[GripperSpec] = None, config: Optional[VerifyConfig] = None,
                       grasp_id: Any = None) -> VerificationResult:
    """Grasp pose in the target's scene frame at its initial joint positions."""
    config = config or VerifyConfig()
    gripper = gripper or default_gripper()
    scene = target.object
    scene.joint(target.joint.id)
    poses = target.poses()
    if not _on_body(grasp, scene.body(target.leaf_body), poses[target.leaf_body]):
        raise PreconditionError(f"grasp contacts are not on leaf body '{target.leaf_body}'")
    state = backend.initial_state(scene)
    ok, reason, detail = _articulation_verdict(scene, state, target.joint.id, target.leaf_body, grasp,
                                               grasp.pose, backend, gripper, config)
    if not ok:
        logger.debug("grasp %s: %s (%s)", grasp_id, reason, detail)
    return VerificationResult(grasp_id, actuation_ok=ok, failure_reason=reason, detail=detail)


# ---------- In situ ----------

def _lift_path_blocked(scene: SceneGraph, state: WorldState, object_id: str, grasp_world: Pose,
                       gripper: GripperSpec, width: float, config: VerifyConfig) -> Optional[str]:
    parts = gripper.pieces(min(gripper.max_opening, width))
    obj = scene.body(object_id)
    obj_pose = state.pose(object_id)
    others = [b for b in scene.bodies if b.id != object_id]
    for k in range(1, LIFT_PATH_SAMPLES + 1):
        up = Pose.from_translation((0.0, 0.0, config.lift_height * k / LIFT_PATH_SAMPLES))
        g = up.compose(grasp_world)
        o = up.compose(obj_pose)
        for b in others:
            bp = state.pose(b.id)
            for pieces, pose in ((parts, g), (obj.colliders, o)):
                q = collide(pieces, pose, b.colliders, bp, max_separation=0.0)
                if q.contact is not None and q.contact.depth > config.contact_tolerance:
                    return b.id
    return None


def _dynamic_lift(scene: SceneGraph, state: WorldState, object_id: str, grasp_world: Pose,
                  gripper: GripperSpec, width: float, backend: PhysicsBackend,
                  config: VerifyConfig) -> float:
    obj = scene.body(object_id)
    pads = _pad_bodies(gripper, grasp_world, width, config.closing_force, obj.friction, config.contact_tolerance)
    lifted = settled_scene(scene, state).with_body(pads[0]).with_body(pads[1])
    s = backend.initial_state(lifted)
    z0 = float(s.pose(object_id).translation[2])
    driver = _PadDriver(backend, lifted, s, object_id, config)
    driver.run(config.hold_duration, _still, check=False)
    driver.move(np.array([0.0, 0.0, config.lift_height]), np.zeros(3), 2.0 * config.move_duration)
    driver.run(config.hold_duration, _still, check=False)
    return float(driver.state.pose(object_id).translation[2]) - z0


def _owning_joint(scene: SceneGraph, body_id: str) -> str:
    j = scene.parent_joint.get(body_id)
    if j is None:
        raise PreconditionError(f"body '{body_id}' is not moved by any joint")
    return j.id


def in_situ_test(grasp: GraspCandidate, scene: SceneGraph, object_id: str, backend: PhysicsBackend,
                 mode: str = "lift", state: Optional[WorldState] = None,
                 gripper: Optional[GripperSpec] = None, config: Optional[VerifyConfig] = None,
                 grasp_id: Any = None) -> VerificationResult:
    """
    Run a grasp (pose in the object's body frame) inside a settled scene: approach
    checks, then lift by lift_height (success at lift_min gain) or articulate the
    object's joint.
    """
    if mode not in ("lift", "articulate"):
        raise ValidationError(f"mode must be 'lift' or 'articulate', got {mode!r}")
    config = config or VerifyConfig()
    gripper = gripper or default_gripper()
    scene.body(object_id)
    state = state or backend.initial_state(scene)
    grasp_world = state.pose(object_id).compose(grasp.pose)
    key = "lift_ok" if mode == "lift" else "articulate_ok"

    joint_id = _owning_joint(scene, object_id) if mode == "articulate" else None
    obstacles: List[Obstacle] = scene_obstacles(scene, {object_id}, state.poses)
    approach = check_approach(gripper, grasp_world, grasp.width, obstacles, config.clearance,
                              config.trajectory_samples)
    flags = {"pregrasp_clear": approach.pregrasp_clear, "trajectory_clear": approach.trajectory_clear,
             "grasp_clear": approach.grasp_clear, key: False}
    if not approach.clear:
        return VerificationResult(grasp_id, in_situ=flags, failure_reason="trajectory_collision",
                                  detail=f"{approach.stage} collides with {approach.obstacle}")

    if joint_id is not None:
        ok, reason, detail = _articulation_verdict(scene, state, joint_id, object_id, grasp, grasp_world,
                                                   backend, gripper, config)
        flags[key] = ok
        return VerificationResult(grasp_id, actuation_ok=ok, in_situ=flags, failure_reason=reason, detail=detail)

    if grasp.width > gripper.max_opening:
        return VerificationResult(grasp_id, in_situ=flags, failure_reason="lift_too_large_object",
                                  detail=f"width {grasp.width:.3f} m")
    blocker = _lift_path_blocked(scene, state, object_id, grasp_world, gripper, grasp.width, config)
    if blocker is not None:
        return VerificationResult(grasp_id, in_situ=flags, failure_reason="vertical_clearance",
                                  detail=f"lift path hits {blocker}")
    gain = _dynamic_lift(scene, state, object_id, grasp_world, gripper, grasp.width, backend, config)
    if gain >= config.lift_min:
        flags[key] = True
        return VerificationResult(grasp_id, in_situ=flags)
    return VerificationResult(grasp_id, in_situ=flags, failure_reason="slip", detail=f"lifted {gain:.3f} m")


# ---------- Summaries ----------

@dataclass(frozen=True)
class CategorySummary:
    category: str
    trials: int
    successes: int
    rate: float
    ci_low: float
    ci_high: float


def summarize_by_category(outcomes: Iterable[Tuple[str, bool]], level: float = 0.95) -> List[CategorySummary]:
    counts: Dict[str, List[int]] = {}
    for category, ok in outcomes:
        c = counts.setdefault(category or "uncategorized", [0, 0])
        c[0] += 1
        c[1] += int(bool(ok))
    rows = []
    for category in sorted(counts):
        n, k = counts[category]
        lo, hi = credible_interval(k, n, level)
        rows.append(CategorySummary(category, n, k, k / n, lo, hi))
    return rows
