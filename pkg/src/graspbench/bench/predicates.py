"""
Success predicates for the benchmark tasks.

Every predicate is a pure function of the episode: minimum thresholds are
inclusive (>=), maximum thresholds inclusive (<=), the navigation distance and
the next-to gap are strict (<).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..errors import PreconditionError, ValidationError
from ..geometry.convex import distance_between, segment_hits
from ..geometry.transforms import geodesic_angle
from .episode import BenchConfig, EpisodeState, Snapshot, TaskSpec


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuccessResult:
    success: bool
    measured: Mapping[str, float] = field(default_factory=dict)
    violated: Optional[str] = None

    def __post_init__(self) -> None:
        if self.success and self.violated is not None:
            raise ValidationError("a successful result cannot name a violated condition")
        if not self.success and self.violated is None:
            raise ValidationError("a failed result must name the violated condition")

    def as_dict(self) -> Dict[str, object]:
        return {"success": self.success, "measured": dict(self.measured), "violated": self.violated}


def _result(measured: Dict[str, float], checks: Sequence[tuple]) -> SuccessResult:
    """checks: (condition name, passed) in evaluation order; the first failure is reported."""
    for name, ok in checks:
        if not ok:
            return SuccessResult(False, measured, name)
    return SuccessResult(True, measured)


def _require_receptacle(ep: EpisodeState) -> str:
    if ep.objects.receptacle is None:
        raise PreconditionError("task needs a receptacle")
    return ep.objects.receptacle


def _require_joint(ep: EpisodeState) -> str:
    if ep.objects.joint is None:
        raise PreconditionError("task needs a joint")
    return ep.objects.joint


def _displacement(ep: EpisodeState, body_id: str) -> tuple:
    p0 = ep.pose(body_id, ep.initial)
    p1 = ep.pose(body_id)
    shift = float(np.linalg.norm(p1.translation - p0.translation))
    angle = math.degrees(geodesic_angle(p0.rotation, p1.rotation))
    return shift, angle


def _up(ep: EpisodeState) -> np.ndarray:
    g = np.asarray(ep.scene.gravity, float)
    n = float(np.linalg.norm(g))
    return -g / n if n > 0 else np.array([0.0, 0.0, 1.0])


# ---------- Pick / place ----------

def eval_pick(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    obj = ep.objects.object
    up = _up(ep)
    lift = float(np.dot(ep.pose(obj).translation - ep.pose(obj, ep.initial).translation, up))
    direct = ep.direct_support(cfg.support_window).get(obj, {})
    holders = set(ep.objects.holders)
    supported = sum(v for s, v in direct.items() if s not in holders)
    measured = {"lift_height": lift, "support_fraction": supported}
    return _result(measured, [
        ("lift", lift >= cfg.pick_lift),
        ("supported", supported <= cfg.pick_support_max),
    ])


def _placement(ep: EpisodeState, receptacle: str, cfg: BenchConfig) -> tuple:
    obj = ep.objects.object
    frac = ep.support_fraction(obj, receptacle, cfg.support_window)
    shift, angle = _displacement(ep, receptacle)
    return frac, shift, angle


def eval_place(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    receptacle = _require_receptacle(ep)
    frac, shift, angle = _placement(ep, receptacle, cfg)
    measured = {"support_fraction": frac, "receptacle_displacement": shift, "receptacle_rotation_deg": angle}
    return _result(measured, [
        ("support", frac >= cfg.place_support),
        ("receptacle_displacement", shift <= cfg.place_receptacle_shift),
        ("receptacle_rotation", angle <= cfg.place_receptacle_rotation_deg),
    ])


def eval_place_color(ep: EpisodeState, cfg: Optional[BenchConfig] = None,
                     distractors: Optional[Sequence[str]] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    receptacle = _require_receptacle(ep)
    others = tuple(ep.objects.distractors if distractors is None else distractors)
    if receptacle in others:
        raise ValidationError(f"target receptacle {receptacle!r} is also listed as a distractor")
    for d in others:
        if not ep.scene.has_body(d):
            raise ValidationError(f"unknown distractor {d!r}")
    base = eval_place(ep, cfg)
    if base.success:
        return base
    for d in sorted(others):
        frac = ep.support_fraction(ep.objects.object, d, cfg.support_window)
        if frac >= cfg.place_support:
            measured = dict(base.measured)
            measured["distractor_support_fraction"] = frac
            return SuccessResult(False, measured, "wrong_receptacle")
    return base


def eval_place_next_to(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    receptacle = _require_receptacle(ep)
    obj = ep.objects.object
    poses = ep.poses()
    a, b = ep.scene.body(obj), ep.scene.body(receptacle)
    gap = float(distance_between(a.colliders, poses[obj], b.colliders, poses[receptacle]))
    holders = ep.objects.holders
    s_obj = ep.supporting_body(obj, cfg.support_window, exclude=holders)
    s_rec = ep.supporting_body(receptacle, cfg.support_window, exclude=holders)
    shift, angle = _displacement(ep, receptacle)
    measured = {"gap": gap, "receptacle_displacement": shift, "receptacle_rotation_deg": angle}
    return _result(measured, [
        ("gap", gap < cfg.next_to_gap),
        ("support_surface", s_obj is not None and s_obj == s_rec),
        ("receptacle_displacement", shift <= cfg.next_to_receptacle_shift),
        ("receptacle_rotation", angle <= cfg.next_to_receptacle_rotation_deg),
    ])


# ---------- Articulation ----------

def eval_open(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    f = ep.open_fraction(_require_joint(ep))
    return _result({"open_fraction": f}, [("open_fraction", f >= cfg.open_fraction)])


def eval_close(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    f = ep.open_fraction(_require_joint(ep))
    return _result({"open_fraction": f}, [("open_fraction", f <= cfg.close_fraction)])


def eval_open_door(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    f = ep.open_fraction(_require_joint(ep))
    return _result({"open_fraction": f}, [("open_fraction", f >= cfg.open_door_fraction)])


# ---------- Navigation ----------

def _aabb_surface_samples(lo: np.ndarray, hi: np.ndarray, k: int) -> np.ndarray:
    """k points on the box surface, faces picked by area; fixed seed so results are reproducible."""
    rng = np.random.default_rng(0)
    ext = np.maximum(hi - lo, 0.0)
    areas = np.array([ext[1] * ext[2], ext[0] * ext[2], ext[0] * ext[1]] * 2)
    total = float(areas.sum())
    probs = areas / total if total > 0 else np.full(6, 1.0 / 6.0)
    faces = rng.choice(6, size=k, p=probs)
    pts = lo + rng.random((k, 3)) * ext
    axis = faces % 3
    pts[np.arange(k), axis] = np.where(faces < 3, lo[axis], hi[axis])
    return pts


def visible_fraction(ep: EpisodeState, body_id: str, samples: int = 64,
                     snapshot: Optional[Snapshot] = None) -> float:
    """Share of surface samples inside the image and not hidden by another body."""
    cam = ep.camera
    if cam is None:
        raise PreconditionError("visibility needs a camera")
    poses = ep.poses(snapshot)
    box = ep.scene.body(body_id).world_aabb(poses[body_id])
    pts = _aabb_surface_samples(box.min, box.max, samples)
    _, inside = cam.project(pts)
    origin = cam.pose.translation
    others = [(b, poses[b.id], b.world_aabb(poses[b.id])) for b in ep.scene.bodies if b.id != body_id]
    visible = 0
    for p, ok in zip(pts, inside):
        if not ok:
            continue
        d = p - origin
        end = p - 1e-6 * d / max(float(np.linalg.norm(d)), 1e-12)
        seg_lo, seg_hi = np.minimum(origin, end), np.maximum(origin, end)
        blocked = False
        for body, pose, bb in others:
            if np.any(bb.max < seg_lo) or np.any(bb.min > seg_hi):
                continue
            if segment_hits(origin, end, body.colliders, pose):
                blocked = True
                break
        visible += not blocked
    return visible / samples


def eval_navigate(ep: EpisodeState, cfg: Optional[BenchConfig] = None) -> SuccessResult:
    cfg = cfg or BenchConfig()
    if ep.camera is None:
        raise PreconditionError("navigate needs a camera")
    if ep.robot_base is None:
        raise PreconditionError("navigate needs the robot base position")
    offset = ep.pose(ep.objects.object).translation - np.asarray(ep.robot_base, float)
    if cfg.navigate_metric == "horizontal":
        up = _up(ep)
        offset = offset - np.dot(offset, up) * up
    dist = float(np.linalg.norm(offset))
    vis = visible_fraction(ep, ep.objects.object, cfg.visibility_samples)
    measured = {"distance": dist, "visible_fraction": vis}
    return _result(measured, [
        ("declared_done", ep.declared_done),
        ("distance", dist < cfg.navigate_distance),
        ("visibility", vis >= cfg.min_visible_fraction),
    ])


EVALUATORS: Dict[str, Callable[[EpisodeState, BenchConfig], SuccessResult]] = {
    "navigate": eval_navigate,
    "pick": eval_pick,
    "place": eval_place,
    "place_color": eval_place_color,
    "place_next_to": eval_place_next_to,
    "open": eval_open,
    "close": eval_close,
    "open_door": eval_open_door,
}


def evaluate(ep: EpisodeState, task: TaskSpec, base: Optional[BenchConfig] = None) -> SuccessResult:
    result = EVALUATORS[task.kind](ep, task.config(base))
    logger.debug("%s: success=%s violated=%s", task.kind, result.success, result.violated)
    return result


# ---------- Episode statistics ----------

@dataclass(frozen=True)
class OracleResult:
    final: SuccessResult
    first_success: Optional[int]  # snapshot index at which an oracle would have stopped

    @property
    def oracle_success(self) -> bool:
        return self.first_success is not None

    def as_dict(self) -> Dict[str, object]:
        return {"final": self.final.as_dict(), "first_success": self.first_success,
                "oracle_success": self.oracle_success}


def oracle_success(ep: EpisodeState, task: TaskSpec, base: Optional[BenchConfig] = None) -> OracleResult:
    """
    Final verdict next to the first snapshot at which the task held. The oracle
    stops the episode itself, so navigation prefixes count as declared done.
    """
    final = evaluate(ep, task, base)
    first = None
    for i in range(len(ep.snapshots)):
        if evaluate(ep.truncated(i, declared_done=True), task, base).success:
            first = i
            break
    return OracleResult(final, first)


def held_flags(ep: EpisodeState, object_id: str, holder_ids: Sequence[str]) -> List[bool]:
    holders = set(holder_ids)
    flags = []
    for snap in ep.snapshots:
        flags.append(any((c.body_a == object_id and c.body_b in holders)
                         or (c.body_b == object_id and c.body_a in holders) for c in snap.contacts))
    return flags


def grasp_transitions(ep: EpisodeState, object_id: str, holder_ids: Sequence[str],
                      until: Optional[int] = None) -> int:
    """Unheld -> held transitions of the object up to snapshot `until` (inclusive, default all)."""
    if not ep.scene.has_body(object_id):
        raise ValidationError(f"unknown body {object_id!r}")
    flags = held_flags(ep, object_id, holder_ids)
    if until is not None:
        flags = flags[: until + 1]
    return sum(1 for a, b in zip(flags, flags[1:]) if b and not a)


__all__ = [
    "EVALUATORS",
    "OracleResult",
    "SuccessResult",
    "eval_close",
    "eval_navigate",
    "eval_open",
    "eval_open_door",
    "eval_pick",
    "eval_place",
    "eval_place_color",
    "eval_place_next_to",
    "evaluate",
    "grasp_transitions",
    "held_flags",
    "oracle_success",
    "visible_fraction",
]
