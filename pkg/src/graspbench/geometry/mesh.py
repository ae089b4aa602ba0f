"""
Triangle meshes: loading (OBJ, binary STL), area-weighted surface sampling and
ray casting.

Meshes are immutable. Derived data (areas, the BVH) is computed lazily and cached on
first use; concurrent first use computes the same value twice at worst.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import MeshFormatError, ValidationError
from .bvh import Aabb, BvhIndex
from .transforms import Pose


logger = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12  # m^2
RAY_EPSILON = 1e-8  # m, minimum hit distance
_DET_EPSILON = 1e-14
_STL_HEADER = 80
_STL_RECORD = np.dtype([
    ("normal", "<f4", (3,)),
    ("v", "<f4", (3, 3)),
    ("attr", "<u2"),
])

MESH_ROLES = ("visual", "collider")


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit sum keeps batched and single evaluations bitwise equal
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray
    dropped_degenerate: int = 0
    source: Optional[str] = None
    role: str = "visual"

    @classmethod
    def from_arrays(cls, vertices: np.ndarray, triangles: np.ndarray, *,
                    source: Optional[str] = None, role: str = "visual") -> "TriangleMesh":
        """Validate, drop degenerate triangles and compute outward normals (counter-clockwise winding)."""
        if role not in MESH_ROLES:
            raise ValidationError(f"mesh role must be one of {MESH_ROLES}, got {role!r}")
        v = np.asarray(vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise MeshFormatError("non-finite vertex coordinates", path=source)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshFormatError("triangle index out of range", path=source)
        if len(t):
            e1 = v[t[:, 1]] - v[t[:, 0]]
            e2 = v[t[:, 2]] - v[t[:, 0]]
            cr = _cross(e1, e2)
            area = 0.5 * np.sqrt(_dot(cr, cr))
            keep = area >= DEGENERATE_AREA
        else:
            cr = np.zeros((0, 3))
            area = np.zeros(0)
            keep = np.zeros(0, dtype=bool)
        dropped = int(len(t) - int(keep.sum()))
        t = t[keep]
        if len(t) == 0:
            raise MeshFormatError("mesh has no non-degenerate triangles", path=source)
        n = cr[keep] / (2.0 * area[keep])[:, None]
        if dropped:
            logger.warning("%s: dropped %d degenerate triangle(s)", source or "mesh", dropped)
        for a in (v, t, n):
            a.setflags(write=False)
        return cls(v, t, n, dropped, source, role)

    def __len__(self) -> int:
        return len(self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        """(T, 3, 3) triangle corner coordinates."""
        return self.vertices[self.triangles]

    @cached_property
    def areas(self) -> np.ndarray:
        c = self.corners
        cr = _cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return 0.5 * np.sqrt(_dot(cr, cr))

    @property
    def surface_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def aabb(self) -> Aabb:
        return Aabb.from_points(self.vertices[np.unique(self.triangles)])

    @property
    def extent(self) -> np.ndarray:
        return self.aabb.extent

    @cached_property
    def bvh(self) -> BvhIndex:
        c = self.corners
        return BvhIndex(c.min(axis=1), c.max(axis=1))

    def transformed(self, pose: Pose) -> "TriangleMesh":
        return TriangleMesh.from_arrays(pose.apply(self.vertices), self.triangles,
                                        source=self.source, role=self.role)

    def with_role(self, role: str) -> "TriangleMesh":
        return TriangleMesh.from_arrays(self.vertices, self.triangles, source=self.source, role=role)


# ---------- Loading ----------

def _parse_obj(text: str, source: str) -> Tuple[np.ndarray, np.ndarray]:
    verts = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshFormatError("vertex needs 3 coordinates", path=source, line=lineno)
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise MeshFormatError(f"bad vertex coordinate in {raw.strip()!r}", path=source, line=lineno) from None
        elif tag == "f":
            if len(parts) < 4:
                raise MeshFormatError("face needs at least 3 vertices", path=source, line=lineno)
            idx = []
            for token in parts[1:]:
                head = token.split("/", 1)[0]
                try:
                    k = int(head)
                except ValueError:
                    raise MeshFormatError(f"bad face index {token!r}", path=source, line=lineno) from None
                if k == 0:
                    raise MeshFormatError("face index 0 (OBJ indices are 1-based)", path=source, line=lineno)
                # negative indices are relative to the vertices seen so far
                k = k - 1 if k > 0 else len(verts) + k
                if not 0 <= k < len(verts):
                    raise MeshFormatError(f"face index {token!r} out of range", path=source, line=lineno)
                idx.append(k)
            for i in range(1, len(idx) - 1):
                faces.append([idx[0], idx[i], idx[i + 1]])
        # vn, vt, o, g, s, usemtl, mtllib: ignored
    if not faces:
        raise MeshFormatError("mesh is empty (no faces)", path=source)
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


def _parse_stl(data: bytes, source: str) -> Tuple[np.ndarray, np.ndarray]:
    if len(data) < _STL_HEADER + 4:
        raise MeshFormatError("truncated STL header", path=source, offset=len(data))
    (count,) = struct.unpack_from("<I", data, _STL_HEADER)
    expected = _STL_HEADER + 4 + count * _STL_RECORD.itemsize
    if len(data) < expected:
        raise MeshFormatError(f"truncated STL body: {count} triangles need {expected} bytes",
                              path=source, offset=len(data))
    if count == 0:
        raise MeshFormatError("mesh is empty (0 triangles)", path=source, offset=_STL_HEADER)
    records = np.frombuffer(data, dtype=_STL_RECORD, count=count, offset=_STL_HEADER + 4)
    corners = records["v"].astype(float).reshape(-1, 3)
    # shared corners are merged exactly so adjacency survives
    verts, inverse = np.unique(corners, axis=0, return_inverse=True)
    return verts, inverse.reshape(-1, 3).astype(np.int64)


def load_mesh(path: Union[str, Path], role: str = "visual") -> TriangleMesh:
    """
    Load an ASCII OBJ or binary STL file (format by suffix). Units are meters.
    Degenerate triangles are dropped and counted in `dropped_degenerate`.
    """
    p = Path(path)
    source = str(p)
    suffix = p.suffix.lower()
    if suffix == ".obj":
        text = p.read_text(encoding="utf-8", errors="replace")
        v, t = _parse_obj(text, source)
    elif suffix == ".stl":
        v, t = _parse_stl(p.read_bytes(), source)
    else:
        raise MeshFormatError(f"unsupported mesh format {p.suffix!r} (expected .obj or .stl)", path=source)
    mesh = TriangleMesh.from_arrays(v, t, source=source, role=role)
    logger.debug("loaded %s: %d vertices, %d triangles (%d dropped)",
                 source, len(mesh.vertices), len(mesh), mesh.dropped_degenerate)
    return mesh


def write_obj(mesh: TriangleMesh, path: Union[str, Path]) -> None:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_stl(mesh: TriangleMesh, path: Union[str, Path]) -> None:
    records = np.zeros(len(mesh), dtype=_STL_RECORD)
    records["normal"] = mesh.normals
    records["v"] = mesh.corners
    header = b"graspbench binary STL".ljust(_STL_HEADER, b" ")
    Path(path).write_bytes(header + struct.pack("<I", len(mesh)) + records.tobytes())


# ---------- Sampling ----------

class SurfaceSamples(NamedTuple):
    points: np.ndarray   # (n, 3)
    normals: np.ndarray  # (n, 3)
    faces: np.ndarray    # (n,) host triangle


def surface_sample(mesh: TriangleMesh, n: int, seed: int) -> SurfaceSamples:
    """Area-weighted uniform points on the surface, with the host triangle's normal."""
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    areas = mesh.areas
    faces = rng.choice(len(mesh), size=int(n), p=areas / areas.sum())
    r1 = np.sqrt(rng.random(int(n)))
    r2 = rng.random(int(n))
    c = mesh.corners[faces]
    pts = ((1.0 - r1)[:, None] * c[:, 0]
           + (r1 * (1.0 - r2))[:, None] * c[:, 1]
           + (r1 * r2)[:, None] * c[:, 2])
    return SurfaceSamples(pts, mesh.normals[faces], faces)


# ---------- Ray casting ----------

@dataclass(frozen=True, eq=False)
class RayHit:
    point: np.ndarray
    normal: np.ndarray
    triangle: int
    distance: float = field(default=0.0)


def _intersect(origins: np.ndarray, dirs: np.ndarray, v0: np.ndarray, e1: np.ndarray,
               e2: np.ndarray) -> np.ndarray:
    """Möller-Trumbore. origins/dirs (R, 1, 3) against triangles (1, T, 3); returns t (R, T), inf on miss."""
    pvec = _cross(dirs, e2)
    det = _dot(e1, pvec)
    ok = np.abs(det) > _DET_EPSILON
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins - v0
    u = _dot(tvec, pvec) * inv
    qvec = _cross(tvec, e1)
    v = _dot(dirs, qvec) * inv
    t = _dot(e2, qvec) * inv
    hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > RAY_EPSILON)
    return np.where(hit, t, np.inf)


def _unit_direction(direction: Sequence[float]) -> np.ndarray:
    d = np.asarray(direction, dtype=float).reshape(3)
    norm = float(np.linalg.norm(d))
    if not np.isfinite(norm) or norm < 1e-12:
        raise ValidationError("ray direction must be nonzero")
    return d / norm


def ray_cast(mesh: TriangleMesh, origin: Sequence[float], direction: Sequence[float],
             max_distance: float = np.inf) -> Optional[RayHit]:
    """Nearest hit farther than 1e-8 m along the ray (BVH accelerated), or None."""
    d = _unit_direction(direction)
    o = np.asarray(origin, dtype=float).reshape(3)
    corners = mesh.corners

    def leaf(prims: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        c = corners[prims]
        t = _intersect(o[None, None, :], d[None, None, :],
                       c[None, :, 0], (c[:, 1] - c[:, 0])[None], (c[:, 2] - c[:, 0])[None])[0]
        return t, prims

    t, tri = mesh.bvh.nearest_ray_hit(o, d, leaf, t_max=max_distance)
    if tri < 0:
        return None
    return RayHit(o + t * d, mesh.normals[tri].copy(), tri, t)


def ray_cast_many(mesh: TriangleMesh, origins: np.ndarray, directions: np.ndarray,
                  chunk_elems: int = 2_000_000) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized brute-force casting of many rays. Directions are normalized.
    Returns (distances (R,), triangle indices (R,)); misses are (inf, -1).
    """
    o = np.asarray(origins, dtype=float).reshape(-1, 3)
    d = np.asarray(directions, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms < 1e-12):
        raise ValidationError("ray direction must be nonzero")
    d = d / norms[:, None]
    c = mesh.corners
    v0 = c[None, :, 0]
    e1 = (c[:, 1] - c[:, 0])[None]
    e2 = (c[:, 2] - c[:, 0])[None]
    dist = np.full(len(o), np.inf)
    tri = np.full(len(o), -1, dtype=np.int64)
    step = max(1, chunk_elems // max(1, len(mesh)))
    for s in range(0, len(o), step):
        t = _intersect(o[s:s + step, None, :], d[s:s + step, None, :], v0, e1, e2)
        best = np.argmin(t, axis=1)  # first index among equal minima
        bt = t[np.arange(len(best)), best]
        hit = np.isfinite(bt)
        dist[s:s + step] = bt
        tri[s:s + step] = np.where(hit, best, -1)
    return dist, tri
