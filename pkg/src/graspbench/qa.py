"""
Scene quality tests.

A scene is settled, then checked by four tests that each work on the scene left by
the previous one:

  stability      free bodies still moving after settling are removed
  intersections  interpenetrating bodies: the free one (or the smaller free one) is removed
  lift           free bodies that cannot be lifted and sit inside another body's box are removed
  articulation   free bodies blocking a joint are removed; fixed blockers flag the scene

Only free, non-articulated bodies are ever removed. Ties are broken by id, never
by declaration order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import Settings, require_fraction, require_positive
from .errors import ValidationError
from .geometry.convex import collide
from .physics.backend import PhysicsBackend, actuation_span, simulate
from .physics.scene import SceneGraph, WorldState, body_aabbs, settled_scene


logger = logging.getLogger(__name__)

TESTS = ("stability", "intersections", "lift", "articulation")
REASONS = ("jitter", "intersection", "unliftable_contained", "blocks_articulation")
TABLE_COLUMNS = {"stability": "Stab.", "lift": "Lift", "intersections": "Inter.", "articulation": "Artic."}

LIFT_CHUNK = 0.25  # s


@dataclass(frozen=True)
class QAConfig:
    settle_duration: float = 20.0
    jitter_window: float = 2.0
    jitter_threshold: float = 0.01
    lift_force_factor: float = 2.0
    lift_duration: float = 2.0
    lift_min: float = 0.05
    articulation_min_fraction: float = 0.70
    intersection_depth: float = 0.002
    site: str = "aabb"

    def __post_init__(self) -> None:
        for key in ("settle_duration", "jitter_window", "jitter_threshold", "lift_force_factor",
                    "lift_duration", "lift_min", "intersection_depth"):
            if not getattr(self, key) > 0:
                raise ValidationError(f"qa.{key} must be > 0")
        if not 0.0 < self.articulation_min_fraction <= 1.0:
            raise ValidationError("qa.articulation_min_fraction must be in (0, 1]")
        if self.site != "aabb":
            raise ValidationError(f"qa.site: only 'aabb' is supported (got {self.site!r})")

    @classmethod
    def from_settings(cls, settings: Settings) -> "QAConfig":
        s = "qa"
        f = settings.getfloat
        return cls(
            settle_duration=require_positive(s, "settle_duration", f(s, "settle_duration")),
            jitter_window=require_positive(s, "jitter_window", f(s, "jitter_window")),
            jitter_threshold=require_positive(s, "jitter_threshold", f(s, "jitter_threshold")),
            lift_force_factor=require_positive(s, "lift_force_factor", f(s, "lift_force_factor")),
            lift_duration=require_positive(s, "lift_duration", f(s, "lift_duration")),
            lift_min=require_positive(s, "lift_min", f(s, "lift_min")),
            articulation_min_fraction=require_fraction(s, "articulation_min_fraction",
                                                       f(s, "articulation_min_fraction")),
            intersection_depth=require_positive(s, "intersection_depth", f(s, "intersection_depth")),
            site=settings.get(s, "site"),
        )

    def as_dict(self) -> Dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Removal:
    body_id: str
    test: str
    reason: str
    detail: str = ""


@dataclass
class QAReport:
    passed: Dict[str, bool] = field(default_factory=dict)
    removed: List[Removal] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    scene_flags: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def removed_ids(self) -> List[str]:
        return [r.body_id for r in self.removed]

    @property
    def all_passed(self) -> bool:
        return all(self.passed.get(t, True) for t in TESTS)

    def merge(self, other: "QAReport") -> None:
        seen = set(self.removed_ids)
        for r in other.removed:
            if r.body_id not in seen:
                self.removed.append(r)
                seen.add(r.body_id)
        self.passed.update(other.passed)
        self.warnings.extend(other.warnings)
        self.scene_flags.extend(other.scene_flags)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": {t: self.passed[t] for t in TESTS if t in self.passed},
            "removed": [{"id": r.body_id, "test": r.test, "reason": r.reason, "detail": r.detail}
                        for r in self.removed],
            "warnings": list(self.warnings),
            "scene_flags": list(self.scene_flags),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QAReport":
        removed = [Removal(r["id"], r["test"], r["reason"], r.get("detail", "")) for r in data.get("removed", [])]
        return cls(dict(data.get("passed", {})), removed, list(data.get("warnings", [])),
                   list(data.get("scene_flags", [])), dict(data.get("metadata", {})))


def _fragment(test: str, removals: List[Removal], flags: Sequence[str] = (),
              warnings: Sequence[str] = ()) -> QAReport:
    rep = QAReport()
    rep.removed = removals
    rep.scene_flags = list(flags)
    rep.warnings = list(warnings)
    rep.passed[test] = not removals and not flags
    for r in removals:
        logger.info("qa %s: removing %s (%s)", test, r.body_id, r.reason)
    return rep


def _removable(scene: SceneGraph) -> List[str]:
    return sorted(b.id for b in scene.bodies if scene.removable(b.id))


# ---------- Operations ----------

def qa_settle(scene: SceneGraph, backend: PhysicsBackend, cfg: QAConfig) -> SceneGraph:
    """The scene with every pose and joint position replaced by its settled value."""
    if not scene.free_bodies():
        return scene
    report = backend.settle(scene, backend.initial_state(scene), cfg.settle_duration)
    logger.info("settled %d bodies, max final-window displacement %.2e m",
                len(scene.bodies), report.max_displacement)
    return settled_scene(scene, report.state)


def qa_stability(scene: SceneGraph, backend: PhysicsBackend, cfg: QAConfig) -> QAReport:
    ids = _removable(scene)
    if not ids:
        return _fragment("stability", [])
    state0 = backend.initial_state(scene)
    start = {i: state0.pose(i).translation for i in ids}
    moved = {i: 0.0 for i in ids}

    def track(state: WorldState) -> WorldState:
        for i in ids:
            moved[i] = max(moved[i], float(np.linalg.norm(state.pose(i).translation - start[i])))
        return state

    final = simulate(backend, scene, state0, cfg.jitter_window, before_step=track)
    track(final)
    removals = [Removal(i, "stability", "jitter", f"moved {moved[i]:.4f} m")
                for i in ids if moved[i] > cfg.jitter_threshold]
    return _fragment("stability", removals)


def qa_intersections(scene: SceneGraph, cfg: Optional[QAConfig] = None) -> QAReport:
    cfg = cfg or QAConfig()
    poses = WorldState.initial(scene).poses
    boxes = body_aabbs(scene, poses)
    ids = sorted(b.id for b in scene.bodies)
    removed: Dict[str, Removal] = {}
    warnings = []
    for ia, a in enumerate(ids):
        for b in ids[ia + 1:]:
            if a in removed or b in removed:
                continue
            if scene.same_articulation(a, b) or not boxes[a].overlaps(boxes[b]):
                continue
            q = collide(scene.body(a).colliders, poses[a], scene.body(b).colliders, poses[b], max_separation=0.0)
            if q.contact is None or q.contact.depth <= cfg.intersection_depth:
                continue
            ra, rb = scene.removable(a), scene.removable(b)
            detail = f"depth {q.contact.depth:.4f} m"
            if ra and rb:
                va, vb = boxes[a].volume(), boxes[b].volume()
                victim = a if va < vb else b  # equal volumes: the greater id goes
                removed[victim] = Removal(victim, "intersections", "intersection",
                                          f"{detail} with {b if victim == a else a}")
            elif ra or rb:
                victim, other = (a, b) if ra else (b, a)
                removed[victim] = Removal(victim, "intersections", "intersection", f"{detail} with {other}")
            else:
                warnings.append(f"fixed_overlap:{a}:{b}")
    return _fragment("intersections", list(removed.values()), warnings=warnings)


def _contained(scene: SceneGraph, body_id: str, boxes: Mapping[str, Any]) -> Optional[str]:
    center = boxes[body_id].center
    for other in sorted(boxes):
        if other != body_id and boxes[other].contains_point(center):
            return other
    return None


def lift_gain(scene: SceneGraph, backend: PhysicsBackend, body_id: str, cfg: QAConfig,
              state: Optional[WorldState] = None) -> float:
    """z gain of a body pushed up with lift_force_factor * m * g, stopping early at lift_min."""
    state = state or backend.initial_state(scene)
    body = scene.body(body_id)
    g = float(np.linalg.norm(scene.gravity))
    up = -scene.gravity / g if g > 0 else np.array([0.0, 0.0, 1.0])
    force = cfg.lift_force_factor * body.mass * g * up
    z0 = float(state.pose(body_id).translation[2])
    elapsed, gain = 0.0, 0.0
    while elapsed < cfg.lift_duration - 1e-12:
        chunk = min(LIFT_CHUNK, cfg.lift_duration - elapsed)
        state = backend.apply_external_force(scene, state, body_id, force, chunk)
        elapsed += chunk
        gain = float(state.pose(body_id).translation[2]) - z0
        if gain >= cfg.lift_min:
            break
    return gain


def qa_lift(scene: SceneGraph, backend: PhysicsBackend, cfg: QAConfig) -> QAReport:
    boxes = body_aabbs(scene, WorldState.initial(scene).poses)
    state0 = backend.initial_state(scene)
    removals, warnings = [], []
    for body_id in _removable(scene):
        gain = lift_gain(scene, backend, body_id, cfg, state0)
        if gain >= cfg.lift_min:
            continue
        host = _contained(scene, body_id, boxes)
        if host is not None:
            removals.append(Removal(body_id, "lift", "unliftable_contained",
                                    f"gain {gain:.3f} m, inside {host}"))
        else:
            warnings.append(f"heavy_unobstructed:{body_id}")
            logger.warning("qa lift: %s rose only %.3f m but is not enclosed; kept", body_id, gain)
    return _fragment("lift", removals, warnings=warnings)


def qa_articulation(scene: SceneGraph, backend: PhysicsBackend, cfg: QAConfig) -> Tuple[QAReport, SceneGraph]:
    """Returns the fragment and the scene with the removed blockers gone."""
    removals: List[Removal] = []
    flags: List[str] = []
    working = scene
    for joint in sorted(scene.joints, key=lambda j: j.id):
        for _ in range(len(scene.bodies) + 1):
            state = backend.initial_state(working)
            span = actuation_span(backend, working, state, joint.id)
            if span.min_coverage >= cfg.articulation_min_fraction and not span.blocked_at_start:
                break
            free = [b for b in span.blockers if working.removable(b)]
            fixed = [b for b in span.blockers if not working.removable(b)]
            if fixed or not free:
                flags.append(f"articulation_blocked:{joint.id}")
                logger.warning("qa articulation: joint %s blocked by %s", joint.id, ", ".join(fixed) or "nothing removable")
                break
            for b in free:
                removals.append(Removal(b, "articulation", "blocks_articulation", f"joint {joint.id}"))
            working = working.without_bodies(free)
    return _fragment("articulation", removals, flags), working


def qa_run_all(scene: SceneGraph, backend: PhysicsBackend, cfg: Optional[QAConfig] = None) -> Tuple[QAReport, SceneGraph]:
    """Settle, then stability -> intersections -> lift -> articulation. Returns (report, cleaned scene)."""
    cfg = cfg or QAConfig()
    report = QAReport(metadata={"site_interpretation": cfg.site, "thresholds": cfg.as_dict(),
                                "backend": getattr(backend, "name", "?")})
    working = qa_settle(scene, backend, cfg)

    frag = qa_stability(working, backend, cfg)
    report.merge(frag)
    working = working.without_bodies(frag.removed_ids)

    frag = qa_intersections(working, cfg)
    report.merge(frag)
    working = working.without_bodies(frag.removed_ids)

    frag = qa_lift(working, backend, cfg)
    report.merge(frag)
    working = working.without_bodies(frag.removed_ids)

    frag, working = qa_articulation(working, backend, cfg)
    report.merge(frag)
    logger.info("qa: %s, %d removed", ", ".join(f"{t}={'pass' if report.passed[t] else 'fail'}" for t in TESTS),
                len(report.removed))
    return report, working


# ---------- Batches ----------

@dataclass
class BatchReport:
    names: List[str]
    reports: List[QAReport]

    @property
    def pass_rates(self) -> Dict[str, float]:
        n = len(self.reports)
        if n == 0:
            return {t: math.nan for t in TESTS}
        return {t: sum(1 for r in self.reports if r.passed.get(t, True)) / n for t in TESTS}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        order = ("stability", "lift", "intersections", "articulation")
        w.writerow(["scene"] + [TABLE_COLUMNS[t] for t in order])
        for name, rep in zip(self.names, self.reports):
            w.writerow([name] + [int(rep.passed.get(t, True)) for t in order])
        rates = self.pass_rates
        w.writerow(["pass_rate"] + [f"{rates[t]:.4f}" for t in order])
        return buf.getvalue()


def qa_run_batch(scenes: Iterable[Tuple[str, SceneGraph]], backend: PhysicsBackend,
                 cfg: Optional[QAConfig] = None, threads: int = 1) -> BatchReport:
    """QA over a scene set; scenes run independently, results stay in input order."""
    items = list(scenes)
    cfg = cfg or QAConfig()

    def one(item: Tuple[str, SceneGraph]) -> QAReport:
        return qa_run_all(item[1], backend, cfg)[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, items))
    else:
        reports = [one(i) for i in items]
    return BatchReport([n for n, _ in items], reports)
