"""Diverse grasp selection by greedy farthest-point clustering in SE(3)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import ValidationError
from ..geometry.transforms import DEFAULT_ROT_WEIGHT, pose_distances_to, stack_poses
from .sampling import GraspCandidate


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClusterResult:
    centers: List[int]        # candidate indices, in selection order
    radius: float             # farthest remaining distance to the centres (0 when all covered)
    assignments: np.ndarray   # (N,) cluster index per candidate
    representatives: List[int]


def farthest_point_clusters(cands: Sequence[GraspCandidate], k: int,
                            rot_weight: float = DEFAULT_ROT_WEIGHT) -> ClusterResult:
    """
    Greedy farthest-point clustering. The first centre is the highest-bias candidate;
    each next centre is the candidate farthest from all chosen centres (ties: lowest
    index). Stops early when every remaining candidate coincides with a centre.
    """
    if k < 1:
        raise ValidationError(f"max_out must be >= 1, got {k}")
    if not rot_weight > 0:
        raise ValidationError("rot_weight must be > 0")
    n = len(cands)
    if n == 0:
        return ClusterResult([], 0.0, np.zeros(0, dtype=np.int64), [])
    t, q = stack_poses(c.pose for c in cands)
    bias = np.array([c.bias_score for c in cands])
    first = int(np.argmax(bias))
    centers = [first]
    nearest = pose_distances_to(t, q, cands[first].pose, rot_weight)
    assign = np.zeros(n, dtype=np.int64)
    while len(centers) < min(k, n):
        nxt = int(np.argmax(nearest))
        if nearest[nxt] <= 0.0:
            break
        d = pose_distances_to(t, q, cands[nxt].pose, rot_weight)
        closer = d < nearest
        assign[closer] = len(centers)
        nearest = np.where(closer, d, nearest)
        centers.append(nxt)
    radius = float(nearest.max())
    reps = []
    for c in range(len(centers)):
        members = np.flatnonzero(assign == c)
        best = members[np.argmax(bias[members])]  # first maximum = lowest index
        reps.append(int(best))
    return ClusterResult(centers, radius, assign, reps)


def cluster_and_select(cands: Sequence[GraspCandidate], max_out: int = 1000,
                       rot_weight: float = DEFAULT_ROT_WEIGHT) -> List[GraspCandidate]:
    """
    One representative (highest bias) per farthest-point cluster, emitted in cluster
    order, so any prefix of the output is spread over the pose space.
    """
    if max_out < 1:
        raise ValidationError(f"max_out must be >= 1, got {max_out}")
    if not cands:
        return []
    res = farthest_point_clusters(cands, max_out, rot_weight)
    logger.info("clustered %d candidates into %d clusters (radius %.4f)",
                len(cands), len(res.centers), res.radius)
    return [cands[i] for i in res.representatives]
