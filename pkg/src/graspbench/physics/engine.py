"""
Built-in rigid-body backend.

Semi-implicit Euler integration with a projected Gauss-Seidel contact solver
(normal + two friction rows per contact point, Baumgarte stabilization,
speculative contacts inside a small margin). Fixed bodies with a velocity and joint
children move kinematically. Resting bodies fall asleep.

Identical inputs give bitwise-identical outputs: there is no warm starting and no
state outside WorldState.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config import Settings, require_positive
from ..errors import IntegrationError, PreconditionError, ValidationError
from ..geometry.bvh import Aabb
from ..geometry.convex import Contact, collide, contact_manifold
from ..geometry.transforms import Pose, integrate_quat, quat_mul, quat_conj, quat_to_matrix, quat_to_rotvec
from .backend import SettleReport, SweepResult
from .scene import ContactRecord, SceneGraph, WorldState


logger = logging.getLogger(__name__)

DT_MIN = 1e-4
DT_MAX = 1e-2


@dataclass(frozen=True)
class PhysicsConfig:
    dt: float = 0.002
    solver_iterations: int = 20
    baumgarte: float = 0.2
    penetration_slop: float = 0.0005
    friction: float = 0.8
    restitution: float = 0.0
    sleep_linear: float = 1e-4
    sleep_angular: float = 1e-3
    sleep_time: float = 0.5
    sweep_steps: int = 200
    sweep_tolerance: float = 0.001
    contact_margin: float = 0.005
    settle_duration: float = 20.0
    settle_window: float = 1.0

    def __post_init__(self) -> None:
        if not DT_MIN <= self.dt <= DT_MAX:
            raise ValidationError(f"physics.dt must be in [{DT_MIN}, {DT_MAX}] (got {self.dt})")
        if self.solver_iterations < 1 or self.sweep_steps < 1:
            raise ValidationError("physics.solver_iterations and physics.sweep_steps must be >= 1")
        for key in ("penetration_slop", "sleep_time", "contact_margin", "sweep_tolerance"):
            if getattr(self, key) < 0:
                raise ValidationError(f"physics.{key} must be >= 0")

    @classmethod
    def from_settings(cls, settings: Settings) -> "PhysicsConfig":
        s = "physics"
        return cls(
            dt=settings.getfloat(s, "dt"),
            solver_iterations=settings.getint(s, "solver_iterations"),
            baumgarte=settings.getfloat(s, "baumgarte"),
            penetration_slop=settings.getfloat(s, "penetration_slop"),
            friction=settings.getfloat(s, "friction"),
            restitution=settings.getfloat(s, "restitution"),
            sleep_linear=settings.getfloat(s, "sleep_linear"),
            sleep_angular=settings.getfloat(s, "sleep_angular"),
            sleep_time=settings.getfloat(s, "sleep_time"),
            sweep_steps=settings.getint(s, "sweep_steps"),
            sweep_tolerance=settings.getfloat(s, "sweep_tolerance"),
            contact_margin=settings.getfloat(s, "contact_margin"),
            settle_duration=require_positive("qa", "settle_duration", settings.getfloat("qa", "settle_duration")),
        )


@dataclass
class _PointContact:
    i: int
    j: int
    point: np.ndarray
    normal: np.ndarray
    depth: float
    mu: float
    preload: float = 0.0


def _tangents(n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, ref)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


class _World:
    """Array view of (scene, state) that the integrator mutates in place."""

    def __init__(self, scene: SceneGraph, state: WorldState, cfg: PhysicsConfig) -> None:
        self.scene = scene
        self.cfg = cfg
        self.ids = [b.id for b in scene.bodies]
        n = len(self.ids)
        self.x = np.array([state.pose(i).translation for i in self.ids], dtype=float).reshape(n, 3)
        self.q = np.array([state.pose(i).rotation for i in self.ids], dtype=float).reshape(n, 4)
        self.v = np.array([state.linear.get(i, np.zeros(3)) for i in self.ids], dtype=float).reshape(n, 3)
        self.w = np.array([state.angular.get(i, np.zeros(3)) for i in self.ids], dtype=float).reshape(n, 3)
        self.sleep = np.array([state.sleep.get(i, 0.0) for i in self.ids], dtype=float)
        self.joint_q = {j.id: float(state.joint_q.get(j.id, j.initial)) for j in scene.joints}
        self.joint_qd = {j.id: float(state.joint_qd.get(j.id, 0.0)) for j in scene.joints}
        self.time = float(state.time)
        self.records: List[ContactRecord] = list(state.contacts)

        children = set(scene.parent_joint)
        self.child = np.array([i in children for i in self.ids])
        self.dynamic = np.array([b.is_free and b.id not in children for b in scene.bodies])
        self.mass = np.array([b.mass if d else np.inf for b, d in zip(scene.bodies, self.dynamic)])
        self.inv_mass = np.where(self.dynamic, 1.0 / self.mass, 0.0)
        self.inertia_inv = np.zeros((n, 3, 3))
        for k, b in enumerate(scene.bodies):
            if self.dynamic[k]:
                self.inertia_inv[k] = np.linalg.inv(b.inertia)
        self.friction = np.array([b.friction for b in scene.bodies])
        self.preload = np.array([b.contact_preload for b in scene.bodies])
        groups = scene.articulation_groups
        gid: Dict[frozenset, int] = {}
        self.group = np.array([gid.setdefault(groups[i], len(gid)) for i in self.ids])
        self.rest = {j.id: scene.rest_offset(j) for j in scene.joints}
        self.force = np.zeros((n, 3))
        self.torque = np.zeros((n, 3))

    # ---- helpers ----
    def pose(self, k: int) -> Pose:
        return Pose(self.x[k], self.q[k])

    def asleep(self, k: int) -> bool:
        return bool(self.dynamic[k] and self.sleep[k] >= self.cfg.sleep_time)

    def wake(self, k: int) -> None:
        self.sleep[k] = 0.0

    def to_state(self) -> WorldState:
        poses = {i: Pose(self.x[k].copy(), self.q[k].copy()) for k, i in enumerate(self.ids)}
        return WorldState(
            self.time, poses,
            {i: self.v[k].copy() for k, i in enumerate(self.ids)},
            {i: self.w[k].copy() for k, i in enumerate(self.ids)},
            dict(self.joint_q), dict(self.joint_qd),
            {i: float(self.sleep[k]) for k, i in enumerate(self.ids)},
            tuple(self.records),
        )

    def world_inertia_inv(self, k: int) -> np.ndarray:
        if not self.dynamic[k] or self.asleep(k):
            return np.zeros((3, 3))
        r = quat_to_matrix(self.q[k])
        return r @ self.inertia_inv[k] @ r.T

    # ---- kinematics ----
    def _advance_kinematic(self, dt: float) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
        """Next poses of kinematic bodies; sets their velocities for the solver."""
        targets: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        for k in range(len(self.ids)):
            if self.dynamic[k] or self.child[k]:
                continue
            if np.any(self.v[k] != 0.0) or np.any(self.w[k] != 0.0):
                targets[k] = (self.x[k] + self.v[k] * dt, integrate_quat(self.q[k], self.w[k], dt))
        if not self.scene.joints:
            return targets
        new_q = {}
        for j in self.scene.joints:
            q = self.joint_q[j.id] + self.joint_qd[j.id] * dt
            if q < j.lo or q > j.hi:
                q = j.clamp(q)
                self.joint_qd[j.id] = 0.0
            new_q[j.id] = q
        # parents are placed before children; dynamic parents use their current pose
        poses: Dict[str, Pose] = {}
        for k, i in enumerate(self.ids):
            if k in targets:
                poses[i] = Pose(*targets[k])
            else:
                poses[i] = self.pose(k)
        changed = set()
        for j in self.scene.joint_order:
            pk = self.scene.body_index[j.parent]
            ck = self.scene.body_index[j.child]
            if new_q[j.id] == self.joint_q[j.id] and pk not in targets and j.parent not in changed \
                    and not self.dynamic[pk]:
                continue
            poses[j.child] = poses[j.parent].compose(j.motion(new_q[j.id] - j.initial)).compose(self.rest[j.id])
            changed.add(j.child)
            p = poses[j.child]
            targets[ck] = (p.translation.copy(), p.rotation.copy())
        self.joint_q.update(new_q)
        for k, (x, q) in targets.items():
            if self.child[k]:
                self.v[k] = (x - self.x[k]) / dt
                dq = quat_mul(q, quat_conj(self.q[k]))
                self.w[k] = quat_to_rotvec(dq) / dt
        return targets

    # ---- collision ----
    def _aabbs(self, margin: float) -> List[Aabb]:
        out = []
        for k, b in enumerate(self.scene.bodies):
            out.append(b.world_aabb(self.pose(k)).expanded(margin))
        return out

    def _moving(self, k: int) -> bool:
        return bool(np.linalg.norm(self.v[k]) > self.cfg.sleep_linear
                    or np.linalg.norm(self.w[k]) > self.cfg.sleep_angular)

    def detect(self) -> List[_PointContact]:
        cfg = self.cfg
        margin = cfg.contact_margin
        boxes = self._aabbs(margin / 2.0)
        n = len(self.ids)
        out: List[_PointContact] = []
        for a in range(n):
            for b in range(a + 1, n):
                if self.group[a] == self.group[b]:
                    continue
                da = self.dynamic[a] and not self.asleep(a)
                db = self.dynamic[b] and not self.asleep(b)
                if not (da or db):
                    # kinematic bodies and sleepers only matter if one can wake the other
                    wake_a = self.asleep(a) and self._moving(b)
                    wake_b = self.asleep(b) and self._moving(a)
                    if not (wake_a or wake_b):
                        continue
                if not boxes[a].overlaps(boxes[b]):
                    continue
                body_a = self.scene.bodies[a]
                body_b = self.scene.bodies[b]
                pa, pb = self.pose(a), self.pose(b)
                pts: List[Contact] = []
                for ca in body_a.colliders:
                    for cb in body_b.colliders:
                        pts.extend(contact_manifold(ca, pa, cb, pb, margin))
                if not pts:
                    continue
                touching = [c for c in pts if c.depth > -cfg.penetration_slop]
                if touching:
                    for s, o in ((a, b), (b, a)):
                        if self.asleep(s) and self._moving(o):
                            self.wake(s)
                mu = min(self.friction[a], self.friction[b])
                pre = max(self.preload[a], self.preload[b])
                share = pre / len(touching) if (pre > 0 and touching) else 0.0
                for c in pts:
                    out.append(_PointContact(a, b, c.point, c.normal, c.depth, mu,
                                             share if c.depth > -cfg.penetration_slop else 0.0))
        return out

    # ---- solver ----
    def solve(self, contacts: List[_PointContact], dt: float) -> np.ndarray:
        cfg = self.cfg
        if not contacts:
            return np.zeros((0, 3))
        bodies = sorted({c.i for c in contacts} | {c.j for c in contacts})
        col = {k: s for s, k in enumerate(bodies)}
        nb = len(bodies)
        inv_m = np.array([0.0 if self.asleep(k) else self.inv_mass[k] for k in bodies])
        inv_i = [self.world_inertia_inv(k) for k in bodies]
        vel = np.concatenate([np.concatenate([self.v[k], self.w[k]]) for k in bodies])

        m = 3 * len(contacts)
        jac = np.zeros((m, 6 * nb))
        minv_jt = np.zeros((6 * nb, m))
        target = np.zeros(m)
        lower = np.zeros(len(contacts))
        mus = np.zeros(len(contacts))
        for c_idx, c in enumerate(contacts):
            a, b = col[c.i], col[c.j]
            ra = c.point - self.x[c.i]
            rb = c.point - self.x[c.j]
            t1, t2 = _tangents(c.normal)
            for r_off, d in enumerate((c.normal, t1, t2)):
                row = 3 * c_idx + r_off
                ca = np.cross(ra, d)
                cb = np.cross(rb, d)
                jac[row, 6 * a:6 * a + 3] = -d
                jac[row, 6 * a + 3:6 * a + 6] = -ca
                jac[row, 6 * b:6 * b + 3] = d
                jac[row, 6 * b + 3:6 * b + 6] = cb
                minv_jt[6 * a:6 * a + 3, row] = -d * inv_m[a]
                minv_jt[6 * a + 3:6 * a + 6, row] = -(inv_i[a] @ ca)
                minv_jt[6 * b:6 * b + 3, row] = d * inv_m[b]
                minv_jt[6 * b + 3:6 * b + 6, row] = inv_i[b] @ cb
            if c.depth > cfg.penetration_slop:
                target[3 * c_idx] = cfg.baumgarte * (c.depth - cfg.penetration_slop) / dt
            elif c.depth < 0.0:
                target[3 * c_idx] = c.depth / dt
            lower[c_idx] = c.preload * dt
            mus[c_idx] = c.mu
        delassus = jac @ minv_jt
        rel = jac @ vel
        if cfg.restitution > 0:
            for c_idx in range(len(contacts)):
                vn0 = rel[3 * c_idx]
                if vn0 < -0.01:
                    target[3 * c_idx] = max(target[3 * c_idx], -cfg.restitution * vn0)
        diag = np.diag(delassus).copy()
        lam = np.zeros(m)
        for c_idx in range(len(contacts)):
            lam[3 * c_idx] = lower[c_idx]
        for _ in range(cfg.solver_iterations):
            for c_idx in range(len(contacts)):
                k = 3 * c_idx
                if diag[k] <= 1e-12:
                    continue
                vn = rel[k] + delassus[k] @ lam
                lam[k] = max(lam[k] + (target[k] - vn) / diag[k], lower[c_idx])
                limit = mus[c_idx] * lam[k]
                for r in (k + 1, k + 2):
                    if diag[r] > 1e-12:
                        vt = rel[r] + delassus[r] @ lam
                        lam[r] = lam[r] - vt / diag[r]
                mag = math.hypot(lam[k + 1], lam[k + 2])
                if mag > limit:
                    scale = limit / mag if mag > 0 else 0.0
                    lam[k + 1] *= scale
                    lam[k + 2] *= scale
        dv = minv_jt @ lam
        for s, k in enumerate(bodies):
            if inv_m[s] > 0:
                self.v[k] += dv[6 * s:6 * s + 3]
                self.w[k] += dv[6 * s + 3:6 * s + 6]
        impulses = np.zeros((len(contacts), 3))
        for c_idx, c in enumerate(contacts):
            t1, t2 = _tangents(c.normal)
            k = 3 * c_idx
            impulses[c_idx] = lam[k] * c.normal + lam[k + 1] * t1 + lam[k + 2] * t2
        return impulses

    # ---- step ----
    def step(self, dt: float) -> None:
        cfg = self.cfg
        g = self.scene.gravity
        n = len(self.ids)
        for k in range(n):
            if self.dynamic[k] and not self.asleep(k):
                self.v[k] = self.v[k] + dt * (g + self.force[k] * self.inv_mass[k])
                if np.any(self.torque[k] != 0.0):
                    self.w[k] = self.w[k] + dt * (self.world_inertia_inv(k) @ self.torque[k])
        targets = self._advance_kinematic(dt)
        contacts = self.detect()
        impulses = self.solve(contacts, dt)

        for k in range(n):
            if self.dynamic[k] and not self.asleep(k):
                self.x[k] = self.x[k] + self.v[k] * dt
                self.q[k] = integrate_quat(self.q[k], self.w[k], dt)
            elif k in targets:
                self.x[k], self.q[k] = targets[k]

        for k in range(n):
            if not self.dynamic[k] or self.asleep(k):
                continue
            if not (np.all(np.isfinite(self.x[k])) and np.all(np.isfinite(self.v[k]))
                    and np.all(np.isfinite(self.q[k])) and np.all(np.isfinite(self.w[k]))):
                raise IntegrationError(self.ids[k])
            if np.linalg.norm(self.v[k]) < cfg.sleep_linear and np.linalg.norm(self.w[k]) < cfg.sleep_angular:
                self.sleep[k] += dt
                if self.sleep[k] >= cfg.sleep_time:
                    self.v[k] = np.zeros(3)
                    self.w[k] = np.zeros(3)
            else:
                self.sleep[k] = 0.0
        for k in range(n):
            if self.child[k]:
                self.v[k] = np.zeros(3)
                self.w[k] = np.zeros(3)

        self.records = self._records(contacts, impulses)
        self.time += dt

    def _records(self, contacts: List[_PointContact], impulses: np.ndarray) -> List[ContactRecord]:
        pairs: Dict[Tuple[int, int], List[int]] = {}
        for idx, c in enumerate(contacts):
            pairs.setdefault((c.i, c.j), []).append(idx)
        out = []
        for (i, j), idxs in pairs.items():
            imp = impulses[idxs].sum(axis=0)
            depth = max(contacts[k].depth for k in idxs)
            if depth <= -self.cfg.penetration_slop and not np.any(imp != 0.0):
                continue
            deepest = max(idxs, key=lambda k: contacts[k].depth)
            out.append(ContactRecord(self.ids[i], self.ids[j], contacts[deepest].point.copy(),
                                     contacts[deepest].normal.copy(), imp, float(depth)))
        return out


class RigidBodyEngine:
    """The built-in PhysicsBackend."""

    name = "builtin"

    def __init__(self, config: Optional[PhysicsConfig] = None) -> None:
        self.config = config or PhysicsConfig()

    def initial_state(self, scene: SceneGraph) -> WorldState:
        return WorldState.initial(scene)

    def _dt(self, dt: Optional[float]) -> float:
        h = self.config.dt if dt is None else float(dt)
        if not DT_MIN <= h <= DT_MAX:
            raise ValidationError(f"dt must be in [{DT_MIN}, {DT_MAX}] s (got {h})")
        return h

    def _steps(self, duration: float) -> int:
        if not duration > 0 or not math.isfinite(duration):
            raise ValidationError(f"duration must be > 0 (got {duration})")
        return max(1, int(round(duration / self.config.dt)))

    def step(self, scene: SceneGraph, state: WorldState, dt: Optional[float] = None) -> WorldState:
        world = _World(scene, state, self.config)
        world.step(self._dt(dt))
        return world.to_state()

    def run(self, scene: SceneGraph, state: WorldState, duration: float,
            forces: Optional[Mapping[str, Sequence[float]]] = None) -> WorldState:
        world = _World(scene, state, self.config)
        for body_id, f in (forces or {}).items():
            k = scene.body_index[body_id]
            world.force[k] = np.asarray(f, dtype=float)
        for _ in range(self._steps(duration)):
            world.step(self.config.dt)
        return world.to_state()

    def settle(self, scene: SceneGraph, state: WorldState, duration: Optional[float] = None) -> SettleReport:
        duration = self.config.settle_duration if duration is None else float(duration)
        total = self._steps(duration)
        window = min(total, max(1, int(round(self.config.settle_window / self.config.dt))))
        world = _World(scene, state, self.config)
        for _ in range(total - window):
            world.step(self.config.dt)
        snap = world.x.copy()
        moved = np.zeros(len(world.ids))
        for _ in range(window):
            world.step(self.config.dt)
            moved = np.maximum(moved, np.linalg.norm(world.x - snap, axis=1))
        disp = {i: float(moved[k]) for k, i in enumerate(world.ids) if world.dynamic[k]}
        max_disp = max(disp.values(), default=0.0)
        logger.debug("settled %d bodies for %.3f s, max final-window displacement %.2e m",
                     len(disp), duration, max_disp)
        return SettleReport(world.to_state(), disp, max_disp)

    def apply_external_force(self, scene: SceneGraph, state: WorldState, body_id: str,
                             force: Sequence[float], duration: float) -> WorldState:
        body = scene.body(body_id)
        if not body.is_free or body_id in scene.parent_joint:
            raise PreconditionError(f"cannot apply a force to non-free body '{body_id}'")
        f = np.asarray(force, dtype=float).reshape(3)
        if not np.all(np.isfinite(f)):
            raise ValidationError("force must be finite")
        if np.any(f != 0.0):
            state = state.awake([body_id])
        return self.run(scene, state, duration, {body_id: f})

    def kinematic_joint_sweep(self, scene: SceneGraph, state: WorldState, joint_id: str,
                              target_fraction: float, steps: Optional[int] = None) -> SweepResult:
        return sweep_joint(scene, state, joint_id, target_fraction,
                           steps or self.config.sweep_steps, self.config.sweep_tolerance)


# ---------- Kinematic joint sweep ----------

def _subtree_poses(scene: SceneGraph, state: WorldState, joint_id: str, q: float,
                   moving: Sequence[str]) -> Dict[str, Pose]:
    jq = dict(state.joint_q)
    jq[joint_id] = q
    posed = scene.posed(state.poses, jq)
    return {b: posed[b] for b in moving}


def _reach_rate(scene: SceneGraph, state: WorldState, joint_id: str, moving: Sequence[str]) -> float:
    """Upper bound on point displacement per unit of joint motion."""
    j = scene.joint(joint_id)
    if j.kind == "slide":
        return 1.0
    parent = state.pose(j.parent)
    axis = parent.apply_vector(j.axis)
    anchor = parent.apply(j.anchor)
    r = 0.0
    for b in moving:
        body = scene.body(b)
        pose = state.pose(b)
        for piece in body.colliders:
            rel = piece.world_vertices(pose) - anchor
            d = np.linalg.norm(rel - np.outer(rel @ axis, axis), axis=1)
            r = max(r, float(d.max()) + piece.radius)
    return max(r, 1e-6)


def sweep_joint(scene: SceneGraph, state: WorldState, joint_id: str, target_fraction: float,
                steps: int, tolerance: float) -> SweepResult:
    """
    Drive one joint kinematically toward `target_fraction`, stopping before the first
    configuration where the moving subtree penetrates another body by more than
    `tolerance`. Bodies of the same articulated object are ignored. Advancement is
    conservative (bounded by the current clearance), so thin obstacles are not skipped.
    """
    j = scene.joint(joint_id)
    if not 0.0 <= target_fraction <= 1.0:
        raise ValidationError(f"target_fraction must be in [0, 1] (got {target_fraction})")
    q_start = j.clamp(float(state.joint_q.get(joint_id, j.initial)))
    f_start = j.fraction(q_start)
    q_target = j.position_at(target_fraction)
    if q_target == q_start or f_start == target_fraction:
        return SweepResult(joint_id, f_start, target_fraction, f_start, (), False, q_start)

    moving = scene.subtree(joint_id)
    group = scene.articulation_groups[j.child]
    others = [b for b in scene.bodies if b.id not in group]
    total = abs(q_target - q_start)
    direction = 1.0 if q_target > q_start else -1.0
    coarse = total / max(1, steps)
    rate = _reach_rate(scene, state, joint_id, moving)

    # broad phase over the whole motion
    swept: Optional[Aabb] = None
    for k in range(steps + 1):
        poses = _subtree_poses(scene, state, joint_id, q_start + direction * coarse * k, moving)
        for b in moving:
            box = scene.body(b).world_aabb(poses[b])
            swept = box if swept is None else swept.union(box)
    assert swept is not None
    swept = swept.expanded(rate * coarse + tolerance)
    candidates = [o for o in others if swept.overlaps(o.world_aabb(state.pose(o.id)))]

    def probe(q: float) -> Tuple[List[str], float]:
        poses = _subtree_poses(scene, state, joint_id, q, moving)
        hit: List[str] = []
        clearance = 0.1
        for o in candidates:
            o_pose = state.pose(o.id)
            for b in moving:
                res = collide(scene.body(b).colliders, poses[b], o.colliders, o_pose)
                if res.contact is not None:
                    if res.contact.depth > tolerance:
                        hit.append(o.id)
                        break
                    clearance = min(clearance, -res.contact.depth)
                elif res.separation is not None:
                    clearance = min(clearance, res.separation)
        return sorted(set(hit)), clearance

    if not candidates:
        return SweepResult(joint_id, f_start, target_fraction, target_fraction, (), False, q_target)

    hit, clearance = probe(q_start)
    if hit:
        return SweepResult(joint_id, f_start, target_fraction, f_start, tuple(hit), True, q_start)

    last_free = q_start
    travelled = 0.0
    while travelled < total:
        advance = min(coarse, max((clearance + tolerance) / rate, 1e-3 * coarse))
        travelled = min(total, travelled + advance)
        q = q_start + direction * travelled
        hit, clearance = probe(q)
        if not hit:
            last_free = q
            continue
        lo, hi = last_free, q
        blockers = hit
        for _ in range(20):
            mid = 0.5 * (lo + hi)
            h, _ = probe(mid)
            if h:
                hi, blockers = mid, h
            else:
                lo = mid
        reached = j.fraction(lo)
        logger.debug("sweep %s: blocked at fraction %.4f by %s", joint_id, reached, blockers)
        return SweepResult(joint_id, f_start, target_fraction, reached, tuple(blockers), False, lo)
    return SweepResult(joint_id, f_start, target_fraction, target_fraction, (), False, q_target)
