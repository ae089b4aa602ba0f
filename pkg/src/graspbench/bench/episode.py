"""
Episode state for task evaluation.

An episode is a scene plus a sequence of snapshots (poses, joint positions and the
contact impulses accumulated since the previous snapshot). The first snapshot is
the initial state, the last one the current state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config import Settings, require_fraction, require_positive
from ..errors import PreconditionError, ValidationError
from ..geometry.transforms import Pose
from ..physics.scene import SceneGraph, WorldState


logger = logging.getLogger(__name__)

TASK_KINDS = ("navigate", "pick", "place", "place_color", "place_next_to", "open", "close", "open_door")
SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class BenchConfig:
    pick_lift: float = 0.01
    pick_support_max: float = 0.05
    place_support: float = 0.5
    place_receptacle_shift: float = 0.10
    place_receptacle_rotation_deg: float = 45.0
    next_to_gap: float = 0.05
    next_to_receptacle_shift: float = 0.05
    next_to_receptacle_rotation_deg: float = 45.0
    open_fraction: float = 0.15
    close_fraction: float = 0.15
    open_door_fraction: float = 0.67
    navigate_distance: float = 1.5
    navigate_metric: str = "horizontal"
    visibility_samples: int = 64
    min_visible_fraction: float = 0.1
    support_window: float = 0.5
    credible_level: float = 0.95

    def __post_init__(self) -> None:
        for key in ("pick_lift", "place_support", "place_receptacle_shift", "place_receptacle_rotation_deg",
                    "next_to_gap", "next_to_receptacle_shift", "next_to_receptacle_rotation_deg",
                    "open_fraction", "close_fraction", "open_door_fraction", "navigate_distance",
                    "min_visible_fraction", "support_window"):
            if not getattr(self, key) > 0:
                raise ValidationError(f"bench.{key} must be > 0")
        if self.pick_support_max < 0:
            raise ValidationError("bench.pick_support_max must be >= 0")
        if self.navigate_metric not in ("horizontal", "euclidean"):
            raise ValidationError(f"bench.navigate_metric must be horizontal or euclidean (got {self.navigate_metric!r})")
        if self.visibility_samples < 1:
            raise ValidationError("bench.visibility_samples must be >= 1")
        if not 0.0 < self.credible_level < 1.0:
            raise ValidationError("bench.credible_level must be in (0, 1)")

    @classmethod
    def from_settings(cls, settings: Settings) -> "BenchConfig":
        s = "bench"
        f = settings.getfloat
        positive = {k: require_positive(s, k, f(s, k)) for k in (
            "pick_lift", "place_receptacle_shift", "place_receptacle_rotation_deg", "next_to_gap",
            "next_to_receptacle_shift", "next_to_receptacle_rotation_deg", "navigate_distance", "support_window")}
        fractions = {k: require_fraction(s, k, f(s, k)) for k in (
            "place_support", "open_fraction", "close_fraction", "open_door_fraction", "min_visible_fraction")}
        return cls(
            pick_support_max=f(s, "pick_support_max"),
            navigate_metric=settings.get(s, "navigate_metric"),
            visibility_samples=settings.getint(s, "visibility_samples"),
            credible_level=f(s, "credible_level"),
            **positive,
            **fractions,
        )

    def with_params(self, params: Mapping[str, float]) -> "BenchConfig":
        unknown = sorted(set(params) - set(self.__dataclass_fields__))
        if unknown:
            raise ValidationError(f"unknown task parameter(s): {', '.join(unknown)}")
        return replace(self, **params)


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    instruction: str = ""

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValidationError(f"unknown task kind {self.kind!r} (expected one of {', '.join(TASK_KINDS)})")
        for k, v in self.params.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) and not v > 0:
                raise ValidationError(f"task parameter {k} must be > 0")

    def config(self, base: Optional[BenchConfig] = None) -> BenchConfig:
        return (base or BenchConfig()).with_params(self.params)


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; looks along its local +z, image x along local +x."""

    pose: Pose
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float = 0.05

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0 and self.width > 0 and self.height > 0 and self.near > 0):
            raise ValidationError("camera intrinsics must be positive")

    def project(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(pixel coordinates (n, 2), in-frustum mask)."""
        local = self.pose.inverse().apply(np.atleast_2d(points))
        z = local[:, 2]
        front = z > self.near
        zs = np.where(front, z, 1.0)
        uv = np.stack([self.fx * local[:, 0] / zs + self.cx, self.fy * local[:, 1] / zs + self.cy], axis=1)
        inside = front & (uv[:, 0] >= 0) & (uv[:, 0] < self.width) & (uv[:, 1] >= 0) & (uv[:, 1] < self.height)
        return uv, inside


@dataclass(frozen=True)
class ContactImpulse:
    body_a: str
    body_b: str
    impulse: np.ndarray  # applied to body_b; body_a receives the opposite

    def onto(self, body_id: str) -> Optional[Tuple[str, np.ndarray]]:
        if body_id == self.body_b:
            return self.body_a, self.impulse
        if body_id == self.body_a:
            return self.body_b, -self.impulse
        return None


@dataclass(frozen=True, eq=False)
class Snapshot:
    time: float
    poses: Mapping[str, Pose]
    joint_q: Mapping[str, float] = field(default_factory=dict)
    contacts: Tuple[ContactImpulse, ...] = ()

    @classmethod
    def from_state(cls, state: WorldState, impulses: Iterable[ContactImpulse] = ()) -> "Snapshot":
        contacts = tuple(impulses) or tuple(ContactImpulse(c.body_a, c.body_b, np.asarray(c.impulse, float))
                                            for c in state.contacts)
        return cls(state.time, dict(state.poses), dict(state.joint_q), contacts)


@dataclass(frozen=True)
class TaskObjects:
    object: str
    receptacle: Optional[str] = None
    joint: Optional[str] = None
    distractors: Tuple[str, ...] = ()
    holders: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class EpisodeState:
    scene: SceneGraph
    objects: TaskObjects
    snapshots: Tuple[Snapshot, ...]
    camera: Optional[Camera] = None
    robot_base: Optional[np.ndarray] = None
    declared_done: bool = False
    dt: float = 0.002
    support: Optional[Mapping[str, Mapping[str, float]]] = None

    def __post_init__(self) -> None:
        if not self.snapshots:
            raise ValidationError("an episode needs at least one snapshot")
        times = [s.time for s in self.snapshots]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("snapshot times must be non-decreasing")
        if not self.dt > 0:
            raise ValidationError("episode dt must be > 0")
        o = self.objects
        for ref in [o.object, o.receptacle, *o.distractors, *o.holders]:
            if ref is not None and not self.scene.has_body(ref):
                raise ValidationError(f"unknown body {ref!r} in task objects")
        if o.joint is not None and o.joint not in self.scene.joint_index:
            raise ValidationError(f"unknown joint {o.joint!r} in task objects")
        if self.support is not None:
            for body, row in self.support.items():
                if not self.scene.has_body(body):
                    raise ValidationError(f"support: unknown body {body!r}")
                for supporter, frac in row.items():
                    if not self.scene.has_body(supporter):
                        raise ValidationError(f"support.{body}: unknown supporter {supporter!r}")
                    if not 0.0 <= frac <= 1.0:
                        raise ValidationError(f"support.{body}.{supporter} must be in [0, 1]")
                if sum(row.values()) > 1.0 + 1e-9:
                    raise ValidationError(f"support.{body}: fractions sum above 1")

    @property
    def initial(self) -> Snapshot:
        return self.snapshots[0]

    @property
    def current(self) -> Snapshot:
        return self.snapshots[-1]

    def truncated(self, index: int, declared_done: Optional[bool] = None) -> "EpisodeState":
        """The episode as it stood at snapshot `index`."""
        done = self.declared_done if declared_done is None else declared_done
        return replace(self, snapshots=self.snapshots[: index + 1], declared_done=done)

    def pose(self, body_id: str, snapshot: Optional[Snapshot] = None) -> Pose:
        snap = snapshot or self.current
        if body_id in snap.poses:
            return snap.poses[body_id]
        return self.scene.body(body_id).initial_pose

    def joint_position(self, joint_id: str, snapshot: Optional[Snapshot] = None) -> float:
        snap = snapshot or self.current
        joint = self.scene.joint(joint_id)
        return float(snap.joint_q.get(joint_id, joint.initial))

    def open_fraction(self, joint_id: str, snapshot: Optional[Snapshot] = None) -> float:
        return self.scene.joint(joint_id).fraction(self.joint_position(joint_id, snapshot))

    def poses(self, snapshot: Optional[Snapshot] = None) -> Dict[str, Pose]:
        return {b.id: self.pose(b.id, snapshot) for b in self.scene.bodies}

    # ---------- Support ----------

    def direct_support(self, window: float) -> Dict[str, Dict[str, float]]:
        """D[B][S]: share of B's weight carried by S over the final `window` seconds."""
        if self.support is not None:
            return {b: dict(row) for b, row in self.support.items()}
        g = float(np.linalg.norm(self.scene.gravity))
        if g == 0.0:
            return {}
        up = -np.asarray(self.scene.gravity, float) / g
        t_end = self.current.time
        totals: Dict[str, Dict[str, float]] = {}
        span = 0.0
        prev_time: Optional[float] = None
        for snap in self.snapshots:
            interval = self.dt if prev_time is None else snap.time - prev_time
            prev_time = snap.time
            if snap.time <= t_end - window - 1e-12:
                continue
            span += interval
            for c in snap.contacts:
                for body in (c.body_a, c.body_b):
                    other, imp = c.onto(body)  # type: ignore[misc]
                    lift = float(np.dot(imp, up))
                    if lift > 0.0:
                        row = totals.setdefault(body, {})
                        row[other] = row.get(other, 0.0) + lift
        if span <= 0.0:
            return {}
        out: Dict[str, Dict[str, float]] = {}
        for body, row in totals.items():
            weight = self.scene.body(body).mass * g * span
            if not self.scene.body(body).is_free or weight <= 0.0:
                continue
            out[body] = {s: min(1.0, v / weight) for s, v in row.items()}
        return out

    def support_fraction(self, body_id: str, supporter: str, window: float) -> float:
        """Share of body_id's weight carried by supporter, directly or through bodies resting on it."""
        return transitive_support(self.direct_support(window), body_id, supporter)

    def supporting_body(self, body_id: str, window: float, exclude: Iterable[str] = ()) -> Optional[str]:
        """The body carrying the largest direct share (ties: smallest id), or None."""
        skip = set(exclude)
        row = {s: v for s, v in self.direct_support(window).get(body_id, {}).items()
               if s not in skip and v > SUPPORT_TOL}
        if not row:
            return None
        return min(row, key=lambda s: (-row[s], s))


def transitive_support(direct: Mapping[str, Mapping[str, float]], body: str, supporter: str) -> float:
    """T(B,S) = D(B,S) + sum over C != S of D(B,C) * T(C,S), capped at 1."""
    bodies = sorted(set(direct) | {s for row in direct.values() for s in row} | {body, supporter})
    t = {b: 0.0 for b in bodies}
    t[supporter] = 0.0
    for _ in range(len(bodies) + 1):
        nxt = {}
        for b in bodies:
            if b == supporter:
                nxt[b] = 0.0
                continue
            row = direct.get(b, {})
            v = row.get(supporter, 0.0)
            v += sum(w * t[c] for c, w in row.items() if c != supporter and c != b)
            nxt[b] = min(1.0, v)
        if all(math.isclose(nxt[b], t[b], abs_tol=1e-12) for b in bodies):
            t = nxt
            break
        t = nxt
    return t[body]


def episode_from_states(scene: SceneGraph, states: Sequence[WorldState], objects: TaskObjects,
                        **kw) -> EpisodeState:
    """Episode built from backend states (contacts of each state's last step)."""
    if not states:
        raise PreconditionError("no states")
    snaps = tuple(Snapshot.from_state(s) for s in states)
    return EpisodeState(scene, objects, snaps, **kw)


__all__ = [
    "BenchConfig",
    "Camera",
    "ContactImpulse",
    "EpisodeState",
    "Snapshot",
    "TASK_KINDS",
    "TaskObjects",
    "TaskSpec",
    "episode_from_states",
    "transitive_support",
]
