"""
Physics backend interface.

Scene QA and grasp verification only talk to a PhysicsBackend; the built-in
RigidBodyEngine is one implementation. check_backend_conformance() runs the
behavioural contract against any implementation and returns the violations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from ..errors import BackendError, GraspbenchError
from ..geometry.convex import ConvexPiece
from ..geometry.transforms import Pose
from .scene import BodySpec, SceneGraph, WorldState


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SettleReport:
    state: WorldState
    final_window_displacement: Mapping[str, float]
    max_displacement: float


@dataclass(frozen=True)
class SweepResult:
    joint_id: str
    start_fraction: float
    target_fraction: float
    reached_fraction: float
    blockers: Tuple[str, ...] = ()
    blocked_at_start: bool = False
    reached_q: float = 0.0

    @property
    def completed(self) -> bool:
        return not self.blockers and self.reached_fraction == self.target_fraction


@dataclass(frozen=True)
class ActuationSpan:
    """Sweeps lo -> hi -> lo from the current position (fractions f_a, f_b, f_c)."""

    joint_id: str
    to_closed: SweepResult
    to_open: SweepResult
    back_closed: SweepResult

    @property
    def opening_coverage(self) -> float:
        return self.to_open.reached_fraction - self.to_closed.reached_fraction

    @property
    def closing_coverage(self) -> float:
        return self.to_open.reached_fraction - self.back_closed.reached_fraction

    @property
    def min_coverage(self) -> float:
        return min(self.opening_coverage, self.closing_coverage)

    @property
    def blockers(self) -> Tuple[str, ...]:
        ids = set(self.to_closed.blockers) | set(self.to_open.blockers) | set(self.back_closed.blockers)
        return tuple(sorted(ids))

    @property
    def blocked_at_start(self) -> bool:
        return self.to_closed.blocked_at_start or self.to_open.blocked_at_start or self.back_closed.blocked_at_start


@runtime_checkable
class PhysicsBackend(Protocol):
    name: str

    def initial_state(self, scene: SceneGraph) -> WorldState: ...

    def step(self, scene: SceneGraph, state: WorldState, dt: Optional[float] = None) -> WorldState: ...

    def settle(self, scene: SceneGraph, state: WorldState, duration: Optional[float] = None) -> SettleReport: ...

    def apply_external_force(self, scene: SceneGraph, state: WorldState, body_id: str,
                             force: Sequence[float], duration: float) -> WorldState: ...

    def kinematic_joint_sweep(self, scene: SceneGraph, state: WorldState, joint_id: str,
                              target_fraction: float, steps: Optional[int] = None) -> SweepResult: ...


def simulate(backend: PhysicsBackend, scene: SceneGraph, state: WorldState, duration: float,
             dt: Optional[float] = None,
             before_step: Optional[Callable[[WorldState], WorldState]] = None,
             until: Optional[Callable[[WorldState], bool]] = None) -> WorldState:
    """Step for `duration` seconds through the plain step() interface."""
    h = dt if dt is not None else getattr(getattr(backend, "config", None), "dt", 0.002)
    n = max(1, int(round(duration / h)))
    for _ in range(n):
        if before_step is not None:
            state = before_step(state)
        state = backend.step(scene, state, h)
        if until is not None and until(state):
            break
    return state


def actuation_span(backend: PhysicsBackend, scene: SceneGraph, state: WorldState, joint_id: str,
                   steps: Optional[int] = None) -> ActuationSpan:
    """Sweep to fully closed, then fully open, then closed again."""
    joint = scene.joint(joint_id)
    a = backend.kinematic_joint_sweep(scene, state, joint_id, 0.0, steps)
    s = state.with_joint(joint_id, joint.position_at(a.reached_fraction))
    b = backend.kinematic_joint_sweep(scene, s, joint_id, 1.0, steps)
    s = s.with_joint(joint_id, joint.position_at(b.reached_fraction))
    c = backend.kinematic_joint_sweep(scene, s, joint_id, 0.0, steps)
    return ActuationSpan(joint_id, a, b, c)


# ---------- Recording wrapper ----------

@dataclass
class RecordingBackend:
    """Delegates to another backend and records every call (name, body/joint argument)."""

    inner: PhysicsBackend
    calls: List[Tuple[str, Any]] = field(default_factory=list)

    @property
    def name(self) -> str:
        return f"recording({self.inner.name})"

    @property
    def config(self) -> Any:
        return getattr(self.inner, "config", None)

    def initial_state(self, scene: SceneGraph) -> WorldState:
        self.calls.append(("initial_state", None))
        return self.inner.initial_state(scene)

    def step(self, scene: SceneGraph, state: WorldState, dt: Optional[float] = None) -> WorldState:
        self.calls.append(("step", dt))
        return self.inner.step(scene, state, dt)

    def settle(self, scene: SceneGraph, state: WorldState, duration: Optional[float] = None) -> SettleReport:
        self.calls.append(("settle", duration))
        return self.inner.settle(scene, state, duration)

    def apply_external_force(self, scene: SceneGraph, state: WorldState, body_id: str,
                             force: Sequence[float], duration: float) -> WorldState:
        self.calls.append(("apply_external_force", body_id))
        return self.inner.apply_external_force(scene, state, body_id, force, duration)

    def kinematic_joint_sweep(self, scene: SceneGraph, state: WorldState, joint_id: str,
                              target_fraction: float, steps: Optional[int] = None) -> SweepResult:
        self.calls.append(("kinematic_joint_sweep", joint_id))
        return self.inner.kinematic_joint_sweep(scene, state, joint_id, target_fraction, steps)


# ---------- Conformance ----------

def probe_scene() -> SceneGraph:
    """A single free sphere high above a fixed slab, for free-fall checks."""
    ground = BodySpec("probe_ground", "fixed", (ConvexPiece.box((1.0, 1.0, 0.05)),),
                      initial_pose=Pose.from_translation((0.0, 0.0, -0.05)))
    ball = BodySpec("probe_ball", "free", (ConvexPiece.sphere(0.05),), mass=1.0,
                    initial_pose=Pose.from_translation((0.0, 0.0, 5.0)))
    return SceneGraph((ground, ball))


def check_backend_conformance(backend: PhysicsBackend, scene: Optional[SceneGraph] = None,
                              state: Optional[WorldState] = None, duration: float = 0.05) -> List[str]:
    """
    Run the backend contract. Returns human-readable violations (empty list = conformant):
    determinism, no-op sweeps, rejection of forces on fixed bodies, zero-force
    equivalence, free-fall sanity.
    """
    violations: List[str] = []
    scene = scene or probe_scene()
    try:
        state = state or backend.initial_state(scene)
    except GraspbenchError as e:
        return [f"initial_state failed: {e}"]

    def guarded(label: str, fn: Callable[[], None]) -> None:
        try:
            fn()
        except GraspbenchError as e:
            violations.append(f"{label}: unexpected error {e.code}: {e}")

    def determinism() -> None:
        a = backend.step(scene, state)
        b = backend.step(scene, state)
        if not a == b:
            violations.append("determinism: two steps from equal inputs differ")
        s1 = simulate(backend, scene, state, duration)
        s2 = simulate(backend, scene, state, duration)
        if not s1 == s2:
            violations.append("determinism: two runs from equal inputs differ")

    def noop_sweeps() -> None:
        for j in scene.joints:
            f = j.fraction(state.joint_q.get(j.id, j.initial))
            r = backend.kinematic_joint_sweep(scene, state, j.id, f)
            if r.reached_fraction != f or r.blockers:
                violations.append(f"sweep: no-op sweep of '{j.id}' moved or reported blockers")

    def fixed_force() -> None:
        for b in scene.bodies:
            if b.is_free:
                continue
            try:
                backend.apply_external_force(scene, state, b.id, (0.0, 0.0, 1.0), duration)
            except GraspbenchError:
                continue
            violations.append(f"force: applying a force to fixed body '{b.id}' did not raise")
            break

    def zero_force() -> None:
        free = [b for b in scene.free_bodies()]
        if not free:
            return
        forced = backend.apply_external_force(scene, state, free[0].id, (0.0, 0.0, 0.0), duration)
        plain = simulate(backend, scene, state, duration)
        if not forced == plain:
            violations.append(f"force: zero force on '{free[0].id}' differs from plain stepping")

    def free_fall() -> None:
        probe = probe_scene()
        s0 = backend.initial_state(probe)
        t = 0.2
        s1 = simulate(backend, probe, s0, t)
        g = float(-probe.gravity[2])
        drop = float(s0.pose("probe_ball").translation[2] - s1.pose("probe_ball").translation[2])
        expected = 0.5 * g * (s1.time - s0.time) ** 2
        if not np.isfinite(drop) or abs(drop - expected) > 0.05 * expected:
            violations.append(f"free fall: dropped {drop:.4f} m, expected {expected:.4f} m")

    for label, fn in (("determinism", determinism), ("sweep", noop_sweeps), ("force", fixed_force),
                      ("force", zero_force), ("free fall", free_fall)):
        guarded(label, fn)
    if violations:
        logger.warning("backend %s: %d conformance violation(s)", getattr(backend, "name", "?"), len(violations))
    return violations


def get_backend(name: str = "builtin", config: Any = None) -> PhysicsBackend:
    if name == "builtin":
        from .engine import RigidBodyEngine
        return RigidBodyEngine(config)
    raise BackendError(f"unknown physics backend '{name}'")


__all__ = [
    "ActuationSpan",
    "PhysicsBackend",
    "RecordingBackend",
    "SettleReport",
    "SweepResult",
    "actuation_span",
    "check_backend_conformance",
    "get_backend",
    "probe_scene",
    "simulate",
]
