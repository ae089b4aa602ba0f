"""Scene model, backend interface and the built-in rigid-body engine."""

from .backend import (
    ActuationSpan,
    PhysicsBackend,
    RecordingBackend,
    SettleReport,
    SweepResult,
    actuation_span,
    check_backend_conformance,
    get_backend,
    simulate,
)
from .engine import PhysicsConfig, RigidBodyEngine
from .scene import BodySpec, ContactRecord, JointSpec, SceneGraph, WorldState, open_fraction

__all__ = [
    "ActuationSpan",
    "BodySpec",
    "ContactRecord",
    "JointSpec",
    "PhysicsBackend",
    "PhysicsConfig",
    "RecordingBackend",
    "RigidBodyEngine",
    "SceneGraph",
    "SettleReport",
    "SweepResult",
    "WorldState",
    "actuation_span",
    "check_backend_conformance",
    "get_backend",
    "open_fraction",
    "simulate",
]
