"""
Procedural shapes: triangle meshes for primitives and meshes of convex pieces.

Primitive meshes come from trimesh.creation and are converted to TriangleMesh.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np
import trimesh
from scipy.spatial import ConvexHull, QhullError

from ..errors import ValidationError
from .convex import ConvexPiece
from .mesh import TriangleMesh
from .transforms import Pose


def _from_trimesh(tm: trimesh.Trimesh, role: str, source: Optional[str]) -> TriangleMesh:
    return TriangleMesh.from_arrays(np.asarray(tm.vertices), np.asarray(tm.faces), source=source, role=role)


def box_mesh(half_extents: Sequence[float], pose: Optional[Pose] = None, role: str = "visual") -> TriangleMesh:
    h = np.asarray(half_extents, dtype=float)
    tm = trimesh.creation.box(extents=2.0 * h)
    mesh = _from_trimesh(tm, role, f"box{tuple(np.round(2 * h, 6).tolist())}")
    return mesh.transformed(pose) if pose is not None else mesh


def sphere_mesh(radius: float, subdivisions: int = 3, role: str = "visual") -> TriangleMesh:
    tm = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    return _from_trimesh(tm, role, f"sphere(r={radius:g})")


def cylinder_mesh(radius: float, height: float, sections: int = 32, role: str = "visual") -> TriangleMesh:
    """Cylinder along z, centred at the origin."""
    tm = trimesh.creation.cylinder(radius=radius, height=height, sections=sections)
    return _from_trimesh(tm, role, f"cylinder(r={radius:g},h={height:g})")


def capsule_mesh(radius: float, half_length: float, role: str = "visual") -> TriangleMesh:
    tm = trimesh.creation.capsule(height=2.0 * half_length, radius=radius)
    return _from_trimesh(tm, role, f"capsule(r={radius:g},l={2 * half_length:g})")


def hull_mesh(points: np.ndarray, role: str = "collider") -> TriangleMesh:
    """Outward-wound triangle mesh of the convex hull of `points`."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    try:
        hull = ConvexHull(pts)
    except (QhullError, ValueError):
        raise ValidationError("convex hull of a flat or degenerate point set has no surface") from None
    tris = hull.simplices.copy()
    c = pts[tris]
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    flip = np.einsum("ij,ij->i", n, hull.equations[:, :3]) < 0
    tris[flip] = tris[flip][:, ::-1]
    return TriangleMesh.from_arrays(pts, tris, source="hull", role=role)


def piece_mesh(piece: ConvexPiece, role: str = "collider") -> TriangleMesh:
    """Surface mesh of one convex piece in its body frame."""
    if piece.primitive == "box":
        return box_mesh(piece.params, piece.frame, role=role)
    if piece.primitive == "sphere":
        return sphere_mesh(piece.radius, role=role).transformed(piece.frame)
    if piece.primitive == "capsule":
        return capsule_mesh(piece.radius, piece.params[1], role=role).transformed(piece.frame)
    if piece.radius > 0:
        # swept hull: hull of the core offset by sphere samples
        ball = sphere_mesh(piece.radius, subdivisions=1).vertices
        pts = (piece.vertices[:, None, :] + ball[None, :, :]).reshape(-1, 3)
        return hull_mesh(pts, role=role)
    return hull_mesh(piece.vertices, role=role)


def merge_meshes(meshes: Iterable[TriangleMesh], role: Optional[str] = None,
                 source: Optional[str] = None) -> TriangleMesh:
    meshes = list(meshes)
    if not meshes:
        raise ValidationError("nothing to merge")
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    return TriangleMesh.from_arrays(np.concatenate(verts), np.concatenate(tris),
                                    source=source or meshes[0].source, role=role or meshes[0].role)


def pieces_mesh(pieces: Sequence[ConvexPiece], role: str = "collider") -> TriangleMesh:
    return merge_meshes([piece_mesh(p, role=role) for p in pieces], role=role, source="pieces")


def cylinder_piece(radius: float, height: float, sections: int = 16,
                   frame: Optional[Pose] = None) -> ConvexPiece:
    """Polyhedral cylinder along z as a hull piece."""
    ang = np.linspace(0.0, 2.0 * np.pi, sections, endpoint=False)
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros_like(ang)], axis=1)
    pts = np.concatenate([ring + [0.0, 0.0, -height / 2.0], ring + [0.0, 0.0, height / 2.0]])
    if frame is not None:
        pts = frame.apply(pts)
    return ConvexPiece.hull(pts)
