"""
Axis-aligned bounding boxes and a median-split bounding volume hierarchy.

The hierarchy is stored flat (numpy arrays, one row per node) and is generic over
its primitives: it only knows their boxes. Callers pass a callback that tests the
primitives of a leaf exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np


LEAF_SIZE = 4


@dataclass(frozen=True, eq=False)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self) -> None:
        lo = np.array(self.min, dtype=float).reshape(3)
        hi = np.array(self.max, dtype=float).reshape(3)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_points(cls, points: np.ndarray) -> "Aabb":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        return cls(pts.min(axis=0), pts.max(axis=0))

    @property
    def center(self) -> np.ndarray:
        return (self.min + self.max) / 2.0

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    def volume(self) -> float:
        return float(np.prod(np.maximum(self.extent, 0.0)))

    def contains_point(self, p: Sequence[float], tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.min - tol) and np.all(p <= self.max + tol))

    def overlaps(self, other: "Aabb", tol: float = 0.0) -> bool:
        return bool(np.all(self.min <= other.max + tol) and np.all(other.min <= self.max + tol))

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))

    def expanded(self, margin: float) -> "Aabb":
        return Aabb(self.min - margin, self.max + margin)

    def corners(self) -> np.ndarray:
        idx = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)])
        return np.where(idx == 0, self.min, self.max)

    def __repr__(self) -> str:
        return f"Aabb(min={self.min.tolist()}, max={self.max.tolist()})"


def ray_box_interval(origin: np.ndarray, inv_dir: np.ndarray,
                     lo: np.ndarray, hi: np.ndarray) -> Tuple[float, float]:
    """Slab test. Returns (t_near, t_far); the ray misses when t_near > t_far."""
    with np.errstate(invalid="ignore"):
        t0 = (lo - origin) * inv_dir
        t1 = (hi - origin) * inv_dir
    # 0 * inf for rays parallel to a slab and starting on its plane
    t0 = np.where(np.isnan(t0), -np.inf, t0)
    t1 = np.where(np.isnan(t1), np.inf, t1)
    t_near = float(np.max(np.minimum(t0, t1)))
    t_far = float(np.min(np.maximum(t0, t1)))
    return t_near, t_far


class BvhIndex:
    """
    Flat median-split BVH over primitive boxes.

    Node arrays: node_min/node_max (M, 3), first (M,) offset into `order`,
    count (M,) primitives for leaves (0 for inner nodes), right (M,) index of the
    second child (the first child of an inner node is always node + 1).
    """

    def __init__(self, prim_min: np.ndarray, prim_max: np.ndarray, leaf_size: int = LEAF_SIZE) -> None:
        prim_min = np.asarray(prim_min, dtype=float).reshape(-1, 3)
        prim_max = np.asarray(prim_max, dtype=float).reshape(-1, 3)
        self.prim_min = prim_min
        self.prim_max = prim_max
        self.leaf_size = max(1, int(leaf_size))
        n = len(prim_min)
        centers = (prim_min + prim_max) / 2.0

        node_min: List[np.ndarray] = []
        node_max: List[np.ndarray] = []
        first: List[int] = []
        count: List[int] = []
        right: List[int] = []
        order = np.arange(n)

        # iterative build; (start, end, parent_slot) where parent_slot receives our node index
        stack: List[Tuple[int, int, int]] = [(0, n, -1)] if n else []
        while stack:
            start, end, parent = stack.pop()
            idx = order[start:end]
            node = len(first)
            node_min.append(prim_min[idx].min(axis=0))
            node_max.append(prim_max[idx].max(axis=0))
            first.append(start)
            right.append(-1)
            if parent >= 0:
                right[parent] = node
            if end - start <= self.leaf_size:
                count.append(end - start)
                continue
            count.append(0)
            c = centers[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            # stable sort keeps builds deterministic for equal keys
            sorted_idx = idx[np.argsort(c[:, axis], kind="stable")]
            order[start:end] = sorted_idx
            mid = (start + end) // 2
            # push right first with a back-reference, then left so it is built next (node + 1)
            stack.append((mid, end, node))
            stack.append((start, mid, -1))

        self.node_min = np.array(node_min).reshape(-1, 3)
        self.node_max = np.array(node_max).reshape(-1, 3)
        self.first = np.array(first, dtype=np.int64)
        self.count = np.array(count, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.order = order

    def __len__(self) -> int:
        return len(self.prim_min)

    @property
    def node_count(self) -> int:
        return len(self.first)

    def root_box(self) -> Optional[Aabb]:
        if self.node_count == 0:
            return None
        return Aabb(self.node_min[0], self.node_max[0])

    def leaf_primitives(self, node: int) -> np.ndarray:
        s = int(self.first[node])
        return self.order[s:s + int(self.count[node])]

    def query_box(self, box: Aabb) -> np.ndarray:
        """Indices of primitives whose boxes overlap `box`, sorted ascending."""
        if self.node_count == 0:
            return np.zeros(0, dtype=np.int64)
        hits: List[np.ndarray] = []
        stack = [0]
        while stack:
            node = stack.pop()
            if np.any(self.node_min[node] > box.max) or np.any(self.node_max[node] < box.min):
                continue
            if self.count[node] > 0:
                prims = self.leaf_primitives(node)
                mask = np.all(self.prim_min[prims] <= box.max, axis=1) & np.all(self.prim_max[prims] >= box.min, axis=1)
                hits.append(prims[mask])
            else:
                stack.append(int(self.right[node]))
                stack.append(node + 1)
        if not hits:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(hits))

    def nearest_ray_hit(self, origin: np.ndarray, direction: np.ndarray,
                        intersect: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]],
                        t_max: float = np.inf) -> Tuple[float, int]:
        """
        Nearest hit along a ray. `intersect(prims)` returns (t, prims) arrays for the
        primitives it hit (t = inf for misses). Ties on t resolve to the lowest index.
        Returns (inf, -1) on a miss.
        """
        best_t = float(t_max)
        best_i = -1
        if self.node_count == 0:
            return np.inf, -1
        with np.errstate(divide="ignore"):
            inv_dir = 1.0 / np.asarray(direction, dtype=float)
        stack = [0]
        while stack:
            node = stack.pop()
            t_near, t_far = ray_box_interval(origin, inv_dir, self.node_min[node], self.node_max[node])
            if t_near > t_far or t_far < 0.0 or t_near > best_t:
                continue
            if self.count[node] > 0:
                ts, prims = intersect(self.leaf_primitives(node))
                for t, p in zip(ts.tolist(), prims.tolist()):
                    if t == np.inf:
                        continue
                    if t < best_t or (t == best_t and (best_i < 0 or p < best_i)):
                        best_t, best_i = t, int(p)
            else:
                stack.append(int(self.right[node]))
                stack.append(node + 1)
        if best_i < 0:
            return np.inf, -1
        return best_t, best_i
