"""
Grasp generation pipeline:

  sample pairs -> pair budget -> pad placements -> roll poses -> cluster & select
  -> isolated collision filter -> analytic robustness pre-check -> first max_grasps

Every stage reports how many items it passed on; the counters go into the grasp
file header.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..config import Settings, require_positive
from ..errors import ValidationError
from ..geometry.convex import ConvexPiece
from ..geometry.mesh import TriangleMesh
from ..geometry.transforms import DEFAULT_ROT_WEIGHT
from .clustering import cluster_and_select
from .filtering import collision_filter, object_obstacle, scene_obstacles
from .gripper import GripperSpec
from .sampling import (
    ArticulatedTarget,
    ContactPair,
    GraspCandidate,
    approach_direction,
    bias_contacts,
    grasp_poses_from_pair,
    pad_placements,
    sample_antipodal,
    sample_articulated,
)
from .verify import PerturbationSpec, VerifyConfig, wrench_slip_oracle


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraspConfig:
    gripper: str = "robotiq-2f85"
    samples: int = 20000
    pair_budget: int = 2000
    friction_angle_deg: float = 15.0
    rolls: int = 8
    pad_depth_samples: int = 3
    thin_threshold: float = 0.012
    max_grasps: int = 1000
    rot_weight: float = DEFAULT_ROT_WEIGHT
    clearance: float = 0.005
    trajectory_samples: int = 10
    oversample: int = 2

    def __post_init__(self) -> None:
        for key in ("samples", "pair_budget", "rolls", "pad_depth_samples", "max_grasps", "oversample"):
            if getattr(self, key) < 1:
                raise ValidationError(f"grasp.{key} must be >= 1")
        if not 0.0 < self.friction_angle_deg < 90.0:
            raise ValidationError("grasp.friction_angle_deg must be in (0, 90)")

    @property
    def friction_angle(self) -> float:
        return math.radians(self.friction_angle_deg)

    @classmethod
    def from_settings(cls, settings: Settings) -> "GraspConfig":
        s = "grasp"
        i, f = settings.getint, settings.getfloat
        return cls(
            gripper=settings.get(s, "gripper"),
            samples=i(s, "samples"),
            pair_budget=i(s, "pair_budget"),
            friction_angle_deg=f(s, "friction_angle_deg"),
            rolls=i(s, "rolls"),
            pad_depth_samples=i(s, "pad_depth_samples"),
            thin_threshold=require_positive(s, "thin_threshold", f(s, "thin_threshold")),
            max_grasps=i(s, "max_grasps"),
            rot_weight=require_positive(s, "rot_weight", f(s, "rot_weight")),
            clearance=f(s, "clearance"),
            trajectory_samples=i(s, "trajectory_samples"),
            oversample=i(s, "oversample"),
        )


@dataclass(frozen=True, eq=False)
class GraspSet:
    object_id: str
    grasps: List[GraspCandidate]
    counters: Dict[str, int]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def approach_histogram(self) -> Dict[str, int]:
        return approach_histogram(self.grasps)


def approach_histogram(grasps: Sequence[GraspCandidate]) -> Dict[str, int]:
    counts = Counter(approach_direction(g.pose) for g in grasps)
    return {k: counts.get(k, 0) for k in ("top", "side", "bottom")}


def _budget(pairs: List[ContactPair], budget: int, seed: int) -> List[ContactPair]:
    if len(pairs) <= budget:
        return pairs
    rng = np.random.default_rng([seed, 1])
    keep = np.sort(rng.choice(len(pairs), size=budget, replace=False))
    return [pairs[i] for i in keep]


def _candidates(pairs: List[ContactPair], gripper: GripperSpec, extent: Sequence[float],
                config: GraspConfig, counters: Dict[str, int]) -> List[GraspCandidate]:
    placed = [p for pair in pairs for p in pad_placements(pair, gripper, config.pad_depth_samples)]
    counters["placements"] = len(placed)
    scored = bias_contacts(placed, gripper, extent, config.thin_threshold)
    cands = [c for pair, score in scored for c in grasp_poses_from_pair(pair, gripper, config.rolls, score)]
    counters["poses"] = len(cands)
    selected = cluster_and_select(cands, config.oversample * config.max_grasps, config.rot_weight)
    counters["clustered"] = len(selected)
    return selected


def generate_grasps(mesh: TriangleMesh, gripper: GripperSpec, config: GraspConfig, seed: int,
                    object_id: str = "object", pieces: Sequence[ConvexPiece] = (),
                    mass: float = 0.2, friction: float = 0.8,
                    verify_config: Optional[VerifyConfig] = None) -> GraspSet:
    """
    Grasps for a rigid object given in its own frame (+z up). With `pieces`, the
    collision filter uses the convex pieces instead of the mesh.
    """
    vcfg = verify_config or VerifyConfig()
    counters: Dict[str, int] = {}
    pairs = sample_antipodal(mesh, gripper, config.samples, seed, config.friction_angle)
    counters["pairs"] = len(pairs)
    pairs = _budget(pairs, config.pair_budget, seed)
    counters["pairs_kept"] = len(pairs)
    selected = _candidates(pairs, gripper, mesh.extent, config, counters)

    geometry = object_obstacle(object_id, None if pieces else mesh, pieces)
    perturb = PerturbationSpec.default(vcfg)
    out: List[GraspCandidate] = []
    free = 0
    for c in selected:
        if len(out) >= config.max_grasps:
            break
        c = collision_filter(c, geometry, gripper, clearance=config.clearance, samples=config.trajectory_samples)
        if not c.flags.collision_free_isolated:
            continue
        free += 1
        if not wrench_slip_oracle(c, mass, friction, vcfg.closing_force, perturb):
            continue
        out.append(c)
    counters["collision_free"] = free
    counters["emitted"] = len(out)
    logger.info("grasps for %s: %s", object_id, ", ".join(f"{k}={v}" for k, v in counters.items()))
    if not out:
        logger.warning("no grasps survived for %s", object_id)
    metadata = {
        "gripper": gripper.name,
        "mesh_source": mesh.source,
        "mesh_role": mesh.role,
        "dropped_degenerate": mesh.dropped_degenerate,
        "thin": bool(float(np.min(mesh.extent)) < config.thin_threshold),
        "mass": mass,
        "friction": friction,
        "approach_histogram": approach_histogram(out),
    }
    return GraspSet(object_id, out, counters, metadata)


def generate_articulated_grasps(target: ArticulatedTarget, gripper: GripperSpec, config: GraspConfig,
                                seed: int) -> GraspSet:
    """Leaf-restricted grasps in the target's scene frame; any contact with the object's geometry is discarded."""
    counters: Dict[str, int] = {}
    pairs = sample_articulated(target, gripper, config.samples, seed, config.friction_angle)
    counters["pairs"] = len(pairs)
    pairs = _budget(pairs, config.pair_budget, seed)
    counters["pairs_kept"] = len(pairs)
    leaf = target.object.body(target.leaf_body)
    extent = leaf.local_aabb.extent
    selected = _candidates(pairs, gripper, extent, config, counters)
    obstacles = scene_obstacles(target.object, poses=target.poses())
    out: List[GraspCandidate] = []
    for c in selected:
        if len(out) >= config.max_grasps:
            break
        flagged = c
        for ob in obstacles:
            flagged = collision_filter(flagged, ob, gripper, clearance=config.clearance,
                                       samples=config.trajectory_samples)
            if not flagged.flags.collision_free_isolated:
                break
        if flagged.flags.collision_free_isolated:
            out.append(flagged)
    counters["collision_free"] = len(out)
    counters["emitted"] = len(out)
    logger.info("articulated grasps for %s/%s: %s", target.joint.id, target.leaf_body,
                ", ".join(f"{k}={v}" for k, v in counters.items()))
    metadata = {"gripper": gripper.name, "joint": target.joint.id, "leaf_body": target.leaf_body,
                "approach_histogram": approach_histogram(out)}
    return GraspSet(target.leaf_body, out, counters, metadata)
