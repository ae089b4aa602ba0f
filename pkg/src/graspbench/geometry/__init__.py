"""Geometry core: poses, meshes, bounding volumes and convex collision queries."""

from .bvh import Aabb, BvhIndex
from .convex import CollisionQuery, Contact, ConvexPiece, collide, contact_manifold
from .mesh import RayHit, SurfaceSamples, TriangleMesh, load_mesh, ray_cast, ray_cast_many, surface_sample
from .transforms import DEFAULT_ROT_WEIGHT, Pose, geodesic_angle, pose_distance

__all__ = [
    "Aabb",
    "BvhIndex",
    "CollisionQuery",
    "Contact",
    "ConvexPiece",
    "DEFAULT_ROT_WEIGHT",
    "Pose",
    "RayHit",
    "SurfaceSamples",
    "TriangleMesh",
    "collide",
    "contact_manifold",
    "geodesic_angle",
    "load_mesh",
    "pose_distance",
    "ray_cast",
    "ray_cast_many",
    "surface_sample",
]
