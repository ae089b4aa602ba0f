"""
Convex collision geometry.

A ConvexPiece is a sphere-swept hull: a core vertex set plus a radius. Boxes and
general hulls have radius 0, a sphere is one vertex swept by r, a capsule two.

Queries:
- gjk_distance: closest points between two cores (GJK with exhaustive sub-simplex projection)
- epa_penetration: penetration depth/normal of overlapping cores (EPA, SAT fallback for flat cases)
- collide: deepest contact between two piece sets, or the separation when within range
- contact_manifold: up to a handful of contact points per piece pair for the solver
- obb_triangles_overlap: exact box/triangle separating-axis test (vectorized)

Normals always point from the first shape (a) to the second (b).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import ValidationError
from .bvh import Aabb
from .transforms import Pose


SEPARATION_RANGE = 0.10  # m, separations farther than this are not reported
HULL_TOLERANCE = 1e-6

_GJK_MAX_ITERS = 64
_EPA_MAX_ITERS = 96
_EPS = 1e-12

PRIMITIVES = ("box", "sphere", "capsule", "hull")

_BOX_SIGNS = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
_SAT_DIRECTIONS = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=3) if any(d)], dtype=float)
_SAT_DIRECTIONS /= np.linalg.norm(_SAT_DIRECTIONS, axis=1)[:, None]


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    pts = np.unique(np.round(np.asarray(points, dtype=float).reshape(-1, 3), 12), axis=0)
    if len(pts) < 4:
        return pts
    try:
        hull = ConvexHull(pts)
    except QhullError:
        # flat or collinear: every point is kept, the support function stays exact
        return pts
    return pts[np.sort(hull.vertices)]


def _hull_planes(points: np.ndarray) -> Optional[np.ndarray]:
    """Unique outward face planes (F, 4): n . x + d <= 0 inside. None for flat sets."""
    if len(points) < 4:
        return None
    try:
        hull = ConvexHull(points)
    except QhullError:
        return None
    eq = hull.equations
    keep: List[np.ndarray] = []
    for row in eq:
        if not any(np.allclose(row, k, atol=1e-9) for k in keep):
            keep.append(row)
    return np.array(keep)


@dataclass(frozen=True, eq=False)
class ConvexPiece:
    """Sphere-swept convex hull in its body's frame."""

    vertices: np.ndarray
    radius: float = 0.0
    primitive: str = "hull"
    params: Tuple[float, ...] = ()
    frame: Pose = field(default_factory=Pose.identity)

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        if len(v) == 0:
            raise ValidationError("convex piece needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise ValidationError("convex piece has non-finite vertices")
        if self.radius < 0 or not math.isfinite(self.radius):
            raise ValidationError(f"convex piece radius must be >= 0, got {self.radius}")
        if self.primitive not in PRIMITIVES:
            raise ValidationError(f"unknown primitive {self.primitive!r}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    # ---- constructors ----
    @classmethod
    def box(cls, half_extents: Sequence[float], frame: Optional[Pose] = None) -> "ConvexPiece":
        h = np.asarray(half_extents, dtype=float).reshape(3)
        if np.any(h <= 0):
            raise ValidationError(f"box half extents must be > 0, got {h.tolist()}")
        frame = frame or Pose.identity()
        return cls(frame.apply(_BOX_SIGNS * h), 0.0, "box", tuple(h), frame)

    @classmethod
    def sphere(cls, radius: float, frame: Optional[Pose] = None) -> "ConvexPiece":
        if not radius > 0:
            raise ValidationError(f"sphere radius must be > 0, got {radius}")
        frame = frame or Pose.identity()
        return cls(frame.translation[None, :], float(radius), "sphere", (float(radius),), frame)

    @classmethod
    def capsule(cls, radius: float, half_length: float, frame: Optional[Pose] = None) -> "ConvexPiece":
        """Capsule along the local z axis of `frame`."""
        if not radius > 0 or not half_length > 0:
            raise ValidationError("capsule radius and half_length must be > 0")
        frame = frame or Pose.identity()
        core = frame.apply(np.array([[0.0, 0.0, -half_length], [0.0, 0.0, half_length]]))
        return cls(core, float(radius), "capsule", (float(radius), float(half_length)), frame)

    @classmethod
    def hull(cls, points: np.ndarray, radius: float = 0.0) -> "ConvexPiece":
        return cls(_hull_vertices(points), float(radius), "hull", ())

    @classmethod
    def segment(cls, a: Sequence[float], b: Sequence[float]) -> "ConvexPiece":
        return cls(np.array([a, b], dtype=float), 0.0, "hull", ())

    # ---- derived ----
    @cached_property
    def planes(self) -> Optional[np.ndarray]:
        """Outward face planes in the body frame, only for polyhedral pieces."""
        if self.radius > 0:
            return None
        if self.primitive == "box":
            r = self.frame.matrix
            h = np.asarray(self.params)
            rows = []
            for k in range(3):
                for s in (1.0, -1.0):
                    n = s * r[:, k]
                    rows.append(np.concatenate([n, [-(n @ self.frame.translation) - h[k]]]))
            return np.array(rows)
        return _hull_planes(self.vertices)

    @cached_property
    def bounding_center(self) -> np.ndarray:
        return (self.vertices.min(axis=0) + self.vertices.max(axis=0)) / 2.0

    @cached_property
    def bounding_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices - self.bounding_center, axis=1))) + self.radius

    def local_aabb(self) -> Aabb:
        return Aabb(self.vertices.min(axis=0) - self.radius, self.vertices.max(axis=0) + self.radius)

    def world_vertices(self, pose: Pose) -> np.ndarray:
        return pose.apply(self.vertices)

    def world_aabb(self, pose: Pose) -> Aabb:
        w = self.world_vertices(pose)
        return Aabb(w.min(axis=0) - self.radius, w.max(axis=0) + self.radius)

    def world_planes(self, pose: Pose) -> Optional[np.ndarray]:
        planes = self.planes
        if planes is None:
            return None
        n = planes[:, :3] @ pose.matrix.T
        d = planes[:, 3] - n @ pose.translation
        return np.concatenate([n, d[:, None]], axis=1)

    def volume(self) -> float:
        r = self.radius
        if self.primitive == "box":
            return float(8.0 * np.prod(self.params))
        if self.primitive == "sphere":
            return 4.0 / 3.0 * math.pi * r ** 3
        if self.primitive == "capsule":
            return 4.0 / 3.0 * math.pi * r ** 3 + math.pi * r * r * 2.0 * self.params[1]
        try:
            return float(ConvexHull(self.vertices).volume)
        except (QhullError, ValueError):
            return 0.0

    def transformed(self, pose: Pose) -> "ConvexPiece":
        """The same piece expressed one frame up (pose maps this frame into the new one)."""
        frame = pose.compose(self.frame)
        if self.primitive == "box":
            return ConvexPiece.box(self.params, frame)
        if self.primitive == "sphere":
            return ConvexPiece.sphere(self.radius, frame)
        if self.primitive == "capsule":
            return ConvexPiece.capsule(self.radius, self.params[1], frame)
        return ConvexPiece(pose.apply(self.vertices), self.radius, "hull", (), Pose.identity())


PieceSet = Union[ConvexPiece, Sequence[ConvexPiece]]


def _as_pieces(shape: PieceSet) -> Sequence[ConvexPiece]:
    if isinstance(shape, ConvexPiece):
        return (shape,)
    return shape


def pieces_aabb(pieces: PieceSet, pose: Pose) -> Aabb:
    boxes = [p.world_aabb(pose) for p in _as_pieces(pieces)]
    out = boxes[0]
    for b in boxes[1:]:
        out = out.union(b)
    return out


# ---------- GJK ----------

def _support(verts: np.ndarray, d: np.ndarray) -> np.ndarray:
    return verts[int(np.argmax(verts @ d))]


def _closest_on_simplex(y: np.ndarray) -> Tuple[np.ndarray, List[int], np.ndarray]:
    """Closest point of the simplex hull to the origin, by exhaustive sub-simplex projection."""
    n = len(y)
    best_d = np.inf
    best: Tuple[np.ndarray, List[int], np.ndarray] = (y[0], [0], np.array([1.0]))
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        p = y[idx]
        if len(idx) == 1:
            lam = np.array([1.0])
        else:
            e = (p[1:] - p[0]).T
            g = e.T @ e
            if abs(np.linalg.det(g)) < 1e-24 * max(1.0, float(np.trace(g))) ** len(idx):
                continue
            mu = np.linalg.solve(g, -(e.T @ p[0]))
            lam = np.concatenate([[1.0 - mu.sum()], mu])
            if np.any(lam < -1e-12):
                continue
        point = lam @ p
        d = float(point @ point)
        if d < best_d - 1e-24 or (abs(d - best_d) <= 1e-24 and len(idx) < len(best[1])):
            best_d = d
            best = (point, idx, lam)
    return best


class GjkResult(NamedTuple):
    distance: float
    point_a: np.ndarray
    point_b: np.ndarray
    simplex: np.ndarray
    simplex_a: np.ndarray
    simplex_b: np.ndarray


def gjk_distance(va: np.ndarray, vb: np.ndarray) -> GjkResult:
    """Distance between the convex hulls of two world vertex sets (0 when they overlap)."""
    ya = [va[0]]
    yb = [vb[0]]
    y = [va[0] - vb[0]]
    v = y[0]
    lam = np.array([1.0])
    for _ in range(_GJK_MAX_ITERS):
        vv = float(v @ v)
        if vv <= 1e-20:
            break
        a = _support(va, -v)
        b = _support(vb, v)
        w = a - b
        if vv - float(v @ w) <= 1e-12 * max(vv, 1e-12):
            break
        if any(np.array_equal(w, q) for q in y):
            break
        ya.append(a)
        yb.append(b)
        y.append(w)
        v_new, idx, lam = _closest_on_simplex(np.array(y))
        ya = [ya[i] for i in idx]
        yb = [yb[i] for i in idx]
        y = [y[i] for i in idx]
        if float(v_new @ v_new) >= vv:
            v = v_new
            break
        v = v_new
        if len(y) == 4:
            v = np.zeros(3)
            break
    y_arr, a_arr, b_arr = np.array(y), np.array(ya), np.array(yb)
    if len(lam) != len(y):
        _, _, lam = _closest_on_simplex(y_arr)
    pa = lam @ a_arr
    pb = lam @ b_arr
    dist = float(np.linalg.norm(v))
    return GjkResult(dist, pa, pb, y_arr, a_arr, b_arr)


# ---------- EPA ----------

def _complete_simplex(va: np.ndarray, vb: np.ndarray, y: List[np.ndarray],
                      ya: List[np.ndarray], yb: List[np.ndarray]) -> bool:
    """Grow a GJK simplex that touches the origin into a non-flat tetrahedron."""
    axes = [np.array(d, dtype=float) for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))]

    def add(d: np.ndarray) -> bool:
        a = _support(va, d)
        b = _support(vb, -d)
        w = a - b
        pts = np.array(y + [w])
        rank = np.linalg.matrix_rank(pts[1:] - pts[0], tol=1e-10) if len(pts) > 1 else 0
        if rank < len(pts) - 1:
            return False
        y.append(w)
        ya.append(a)
        yb.append(b)
        return True

    while len(y) < 4:
        grown = False
        if len(y) == 3:
            n = np.cross(y[1] - y[0], y[2] - y[0])
            cands = [n, -n]
        elif len(y) == 2:
            e = y[1] - y[0]
            cands = []
            for ax in axes:
                c = np.cross(e, ax)
                if np.linalg.norm(c) > 1e-9:
                    cands.append(c)
        else:
            cands = axes
        for d in cands:
            if add(d / np.linalg.norm(d)):
                grown = True
                break
        if not grown:
            return False
    return True


def _face_plane(w: List[np.ndarray], f: Tuple[int, int, int]) -> Tuple[np.ndarray, float]:
    a, b, c = w[f[0]], w[f[1]], w[f[2]]
    n = np.cross(b - a, c - a)
    norm = float(np.linalg.norm(n))
    if norm < 1e-18:
        return np.zeros(3), np.inf
    n = n / norm
    return n, float(n @ a)


class Penetration(NamedTuple):
    depth: float
    normal: np.ndarray
    point_a: np.ndarray
    point_b: np.ndarray


def epa_penetration(va: np.ndarray, vb: np.ndarray, g: GjkResult) -> Optional[Penetration]:
    """Expanding polytope from a GJK simplex containing the origin. None if the difference is flat."""
    w = [p for p in g.simplex]
    wa = [p for p in g.simplex_a]
    wb = [p for p in g.simplex_b]
    if not _complete_simplex(va, vb, w, wa, wb):
        return None
    centroid = np.mean(w, axis=0)
    faces: List[Tuple[int, int, int]] = []
    for f in ((0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)):
        n, _ = _face_plane(w, f)
        if n @ (w[f[0]] - centroid) < 0:
            f = (f[0], f[2], f[1])
        faces.append(f)

    best: Optional[Tuple[Tuple[int, int, int], np.ndarray, float]] = None
    for _ in range(_EPA_MAX_ITERS):
        planes = [_face_plane(w, f) for f in faces]
        k = int(np.argmin([d for _, d in planes]))
        n, d = planes[k]
        if not np.isfinite(d):
            return None
        best = (faces[k], n, d)
        a = _support(va, n)
        b = _support(vb, -n)
        p = a - b
        if float(p @ n) - d <= 1e-10:
            break
        visible = [i for i, (fn, fd) in enumerate(planes) if float(fn @ p) - fd > 1e-12]
        if not visible:
            break
        edges = {}
        for i in visible:
            f = faces[i]
            for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                edges[e] = True
        horizon = [e for e in edges if (e[1], e[0]) not in edges]
        w.append(p)
        wa.append(a)
        wb.append(b)
        new = len(w) - 1
        vis = set(visible)
        faces = [f for i, f in enumerate(faces) if i not in vis] + [(e[0], e[1], new) for e in horizon]
    if best is None:
        return None
    f, n, d = best
    d = max(d, 0.0)
    # barycentric coordinates of the origin's projection on the face
    tri = np.array([w[f[0]], w[f[1]], w[f[2]]])
    lam = _barycentric(n * d, tri)
    pa = lam @ np.array([wa[f[0]], wa[f[1]], wa[f[2]]])
    pb = lam @ np.array([wb[f[0]], wb[f[1]], wb[f[2]]])
    return Penetration(d, n, pa, pb)


def _barycentric(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    v0 = tri[1] - tri[0]
    v1 = tri[2] - tri[0]
    v2 = p - tri[0]
    d00, d01, d11 = v0 @ v0, v0 @ v1, v1 @ v1
    d20, d21 = v2 @ v0, v2 @ v1
    den = d00 * d11 - d01 * d01
    if abs(den) < 1e-30:
        return np.array([1.0, 0.0, 0.0])
    v = (d11 * d20 - d01 * d21) / den
    u = (d00 * d21 - d01 * d20) / den
    return np.array([1.0 - v - u, v, u])


def sat_penetration(va: np.ndarray, vb: np.ndarray, planes_a: Optional[np.ndarray] = None,
                    planes_b: Optional[np.ndarray] = None) -> Penetration:
    """Minimum overlap over candidate axes (face normals and the 26 lattice directions)."""
    axes = [_SAT_DIRECTIONS]
    if planes_a is not None:
        axes.append(planes_a[:, :3])
    if planes_b is not None:
        axes.append(-planes_b[:, :3])
    dirs = np.concatenate(axes)
    depth = (va @ dirs.T).max(axis=0) - (vb @ dirs.T).min(axis=0)
    k = int(np.argmin(depth))
    n = dirs[k]
    return Penetration(float(depth[k]), n, _support(va, n), _support(vb, -n))


# ---------- Piece pair queries ----------

@dataclass(frozen=True, eq=False)
class Contact:
    point: np.ndarray
    normal: np.ndarray
    depth: float


@dataclass(frozen=True, eq=False)
class CollisionQuery:
    contact: Optional[Contact]
    separation: Optional[float]

    @property
    def hit(self) -> bool:
        return self.contact is not None


class PairResult(NamedTuple):
    depth: float  # signed: > 0 penetration, < 0 separation
    normal: np.ndarray
    point: np.ndarray


def pair_query(wa: np.ndarray, ra: float, wb: np.ndarray, rb: float,
               planes_a: Optional[np.ndarray] = None,
               planes_b: Optional[np.ndarray] = None) -> PairResult:
    """Signed depth between two world-space sphere-swept hulls."""
    g = gjk_distance(wa, wb)
    r = ra + rb
    if g.distance > 1e-9:
        n = (g.point_b - g.point_a) / g.distance
        point = 0.5 * ((g.point_a + n * ra) + (g.point_b - n * rb))
        return PairResult(r - g.distance, n, point)
    pen = epa_penetration(wa, wb, g)
    if pen is None or not np.all(np.isfinite(pen.normal)) or float(np.linalg.norm(pen.normal)) < 0.5:
        pen = sat_penetration(wa, wb, planes_a, planes_b)
    n = pen.normal
    point = 0.5 * (pen.point_a + pen.point_b) + n * 0.5 * (ra - rb)
    return PairResult(pen.depth + r, n, point)


def collide(a: PieceSet, pose_a: Pose, b: PieceSet, pose_b: Pose,
            max_separation: float = SEPARATION_RANGE) -> CollisionQuery:
    """
    Deepest contact between two piece sets. When nothing overlaps, the smallest
    separation is reported if it is within `max_separation`.
    """
    best: Optional[PairResult] = None
    for pa in _as_pieces(a):
        ca = pose_a.apply(pa.bounding_center)
        wa = pa.world_vertices(pose_a)
        for pb in _as_pieces(b):
            cb = pose_b.apply(pb.bounding_center)
            if float(np.linalg.norm(ca - cb)) > pa.bounding_radius + pb.bounding_radius + max_separation:
                continue
            res = pair_query(wa, pa.radius, pb.world_vertices(pose_b), pb.radius,
                             pa.world_planes(pose_a), pb.world_planes(pose_b))
            if best is None or res.depth > best.depth:
                best = res
    if best is None:
        return CollisionQuery(None, None)
    if best.depth > 0.0:
        return CollisionQuery(Contact(best.point, best.normal, best.depth), None)
    sep = -best.depth
    return CollisionQuery(None, sep if sep <= max_separation else None)


def penetration_depth(a: PieceSet, pose_a: Pose, b: PieceSet, pose_b: Pose) -> float:
    q = collide(a, pose_a, b, pose_b, max_separation=0.0)
    return q.contact.depth if q.contact is not None else 0.0


def distance_between(a: PieceSet, pose_a: Pose, b: PieceSet, pose_b: Pose,
                     max_separation: float = np.inf) -> float:
    """Surface-to-surface distance (0 when overlapping, inf beyond max_separation)."""
    q = collide(a, pose_a, b, pose_b, max_separation=max_separation)
    if q.contact is not None:
        return 0.0
    return q.separation if q.separation is not None else np.inf


def segment_hits(p0: Sequence[float], p1: Sequence[float], pieces: PieceSet, pose: Pose,
                 tol: float = 0.0) -> bool:
    seg = np.array([p0, p1], dtype=float)
    for piece in _as_pieces(pieces):
        g = gjk_distance(seg, piece.world_vertices(pose))
        if g.distance <= piece.radius + tol:
            return True
    return False


def contact_manifold(piece_a: ConvexPiece, pose_a: Pose, piece_b: ConvexPiece, pose_b: Pose,
                     margin: float, max_points: int = 8) -> List[Contact]:
    """
    Contact points for the solver. Depth is signed: points separated by less than
    `margin` are kept as speculative contacts with negative depth.
    """
    ca = pose_a.apply(piece_a.bounding_center)
    cb = pose_b.apply(piece_b.bounding_center)
    if float(np.linalg.norm(ca - cb)) > piece_a.bounding_radius + piece_b.bounding_radius + margin:
        return []
    wa = piece_a.world_vertices(pose_a)
    wb = piece_b.world_vertices(pose_b)
    pl_a = piece_a.world_planes(pose_a)
    pl_b = piece_b.world_planes(pose_b)
    base = pair_query(wa, piece_a.radius, wb, piece_b.radius, pl_a, pl_b)
    if base.depth < -margin:
        return []
    n = base.normal
    contacts = [Contact(base.point, n, base.depth)]

    if pl_a is not None and pl_b is not None:
        # vertices of each hull inside (or within margin of) the other
        for verts, planes, sign in ((wa, pl_b, -1.0), (wb, pl_a, 1.0)):
            inside = np.all(verts @ planes[:, :3].T + planes[:, 3] <= margin, axis=1)
            if not np.any(inside):
                continue
            ref = int(np.argmax(sign * (planes[:, :3] @ n)))
            depths = -(verts[inside] @ planes[ref, :3] + planes[ref, 3])
            for p, d in zip(verts[inside], depths):
                if d > -margin:
                    contacts.append(Contact(p + sign * n * 0.5 * d, n, float(d)))
    else:
        # rounded pieces: each core vertex acts as a sphere (capsules get both ends)
        for verts, r_self, other, r_other, pl_o, flip in ((wa, piece_a.radius, wb, piece_b.radius, pl_b, False),
                                                          (wb, piece_b.radius, wa, piece_a.radius, pl_a, True)):
            if len(verts) > 8 or len(verts) < 2:
                continue
            for vtx in verts:
                if flip:
                    res = pair_query(other, r_other, vtx[None, :], r_self, pl_o, None)
                else:
                    res = pair_query(vtx[None, :], r_self, other, r_other, None, pl_o)
                if res.depth > -margin:
                    contacts.append(Contact(res.point, res.normal, res.depth))

    merged: List[Contact] = []
    for c in sorted(contacts, key=lambda c: -c.depth):
        if all(float(np.linalg.norm(c.point - m.point)) > 1e-4 for m in merged):
            merged.append(c)
        if len(merged) >= max_points:
            break
    return merged


# ---------- Box / triangle SAT ----------

def obb_triangles_overlap(center: np.ndarray, rotation: np.ndarray, half_extents: np.ndarray,
                          triangles: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """
    Exact overlap of an oriented box with each triangle (13-axis separating test).
    triangles: (T, 3, 3) world corners. Returns a bool array (T,).
    """
    tris = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    if len(tris) == 0:
        return np.zeros(0, dtype=bool)
    h = np.asarray(half_extents, dtype=float)
    v = (tris - np.asarray(center, dtype=float)) @ np.asarray(rotation, dtype=float)
    separated = np.zeros(len(v), dtype=bool)
    # box face normals
    for k in range(3):
        separated |= (v[:, :, k].min(axis=1) > h[k] + tol) | (v[:, :, k].max(axis=1) < -h[k] - tol)
    f = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)
    # triangle normal
    nrm = np.cross(f[:, 0], f[:, 1])
    p = np.einsum("tij,tj->ti", v, nrm)
    r = np.abs(nrm) @ h
    separated |= (p.min(axis=1) > r + tol) | (p.max(axis=1) < -r - tol)
    # edge cross products
    eye = np.eye(3)
    for i in range(3):
        for j in range(3):
            ax = np.cross(eye[i][None, :], f[:, j])
            p = np.einsum("tij,tj->ti", v, ax)
            r = np.abs(ax) @ h
            separated |= (p.min(axis=1) > r + tol) | (p.max(axis=1) < -r - tol)
    return ~separated


def box_pieces_overlap_mesh(boxes: Iterable[Tuple[Pose, np.ndarray]], mesh_corners: np.ndarray,
                            bvh) -> bool:
    """True if any oriented box (pose, half extents) overlaps a mesh triangle."""
    for pose, half in boxes:
        r = pose.matrix
        ext = np.abs(r) @ np.asarray(half, dtype=float)
        box = Aabb(pose.translation - ext, pose.translation + ext)
        prims = bvh.query_box(box)
        if len(prims) and bool(np.any(obb_triangles_overlap(pose.translation, r, half, mesh_corners[prims]))):
            return True
    return False
