"""
Rigid transforms: unit quaternions (w, x, y, z) and SE(3) poses.

All interfaces are numpy based. Quaternions are canonicalized to w >= 0 so that
distances and hashes are stable; scipy's (x, y, z, w) order only appears at the
boundary with scipy.spatial.transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import ValidationError


DEFAULT_ROT_WEIGHT = 0.05  # m/rad


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def canonicalize_quat(q: Sequence[float]) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if not math.isfinite(n) or n < 1e-12:
        raise ValidationError(f"invalid quaternion {list(q)}")
    # already-unit inputs pass through untouched so re-wrapping a pose is bitwise stable
    if abs(n - 1.0) > 1e-12:
        q = q / n
    if q[0] < 0.0:
        q = -q
    return q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    x, y, z, w = Rotation.from_matrix(np.asarray(m, dtype=float)).as_quat()
    return canonicalize_quat([w, x, y, z])


def rotvec_to_quat(rv: Sequence[float]) -> np.ndarray:
    rv = np.asarray(rv, dtype=float)
    angle = float(np.linalg.norm(rv))
    if angle < 1e-15:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = rv / angle
    s = math.sin(angle / 2.0)
    return canonicalize_quat([math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w]).as_rotvec()


def axis_angle_quat(axis: Sequence[float], angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        raise ValidationError("rotation axis must be nonzero")
    return rotvec_to_quat(axis / n * angle)


def integrate_quat(q: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """Advance orientation q by world-frame angular velocity omega over dt."""
    dq = rotvec_to_quat(np.asarray(omega, dtype=float) * dt)
    return canonicalize_quat(quat_mul(dq, q))


def geodesic_angle(qa: Sequence[float], qb: Sequence[float]) -> float:
    """Rotation angle between two orientations, 2*acos(|<qa, qb>|), in [0, pi]."""
    d = abs(float(np.dot(qa, qb)))
    return 2.0 * math.acos(min(1.0, d))


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform p(x) = R x + t. Immutable."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self) -> None:
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ValidationError(f"non-finite translation {list(t)}")
        object.__setattr__(self, "translation", _frozen(t))
        object.__setattr__(self, "rotation", _frozen(canonicalize_quat(self.rotation)))

    # ---- constructors ----
    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_translation(cls, t: Sequence[float]) -> "Pose":
        return cls(np.asarray(t, dtype=float))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, 3], matrix_to_quat(m[:3, :3]))

    @classmethod
    def from_rotation_matrix(cls, r: np.ndarray, t: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        return cls(np.asarray(t, dtype=float), matrix_to_quat(r))

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float,
                        t: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        return cls(np.asarray(t, dtype=float), axis_angle_quat(axis, angle))

    @classmethod
    def from_rotvec(cls, rv: Sequence[float], t: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        return cls(np.asarray(t, dtype=float), rotvec_to_quat(rv))

    # ---- algebra ----
    @property
    def matrix(self) -> np.ndarray:
        """3x3 rotation matrix."""
        return quat_to_matrix(self.rotation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.matrix
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply other first, then self."""
        return Pose(self.translation + self.matrix @ other.translation,
                    quat_mul(self.rotation, other.rotation))

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        r_t = self.matrix.T
        return Pose(-(r_t @ self.translation), quat_conj(self.rotation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points (3,) or (N, 3)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + self.translation

    def apply_vector(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.matrix.T

    def rotvec(self) -> np.ndarray:
        return quat_to_rotvec(self.rotation)

    # ---- comparison ----
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.translation, other.translation)
                    and np.array_equal(self.rotation, other.rotation))

    def __hash__(self) -> int:
        return hash((tuple(self.translation.tolist()), tuple(self.rotation.tolist())))

    def isclose(self, other: "Pose", tol: float = 1e-9) -> bool:
        return (float(np.linalg.norm(self.translation - other.translation)) <= tol
                and geodesic_angle(self.rotation, other.rotation) <= tol)

    def __repr__(self) -> str:
        t = ", ".join(f"{v:.6g}" for v in self.translation)
        q = ", ".join(f"{v:.6g}" for v in self.rotation)
        return f"Pose(t=({t}), q=({q}))"


def pose_distance(a: Pose, b: Pose, rot_weight: float = DEFAULT_ROT_WEIGHT) -> float:
    """d = |t_a - t_b| + rot_weight * geodesic_angle(q_a, q_b), in meters."""
    if not rot_weight > 0:
        raise ValidationError("rot_weight must be > 0")
    return (float(np.linalg.norm(a.translation - b.translation))
            + rot_weight * geodesic_angle(a.rotation, b.rotation))


def stack_poses(poses: Iterable[Pose]) -> Tuple[np.ndarray, np.ndarray]:
    """(N, 3) translations and (N, 4) quaternions, for vectorized distances."""
    poses = list(poses)
    if not poses:
        return np.zeros((0, 3)), np.zeros((0, 4))
    return (np.stack([p.translation for p in poses]),
            np.stack([p.rotation for p in poses]))


def pose_distances_to(translations: np.ndarray, quats: np.ndarray, ref: Pose,
                      rot_weight: float = DEFAULT_ROT_WEIGHT) -> np.ndarray:
    """Vectorized pose_distance from every row to `ref`."""
    dt = np.linalg.norm(translations - ref.translation, axis=1)
    dots = np.clip(np.abs(quats @ ref.rotation), 0.0, 1.0)
    return dt + rot_weight * 2.0 * np.arccos(dots)


def orthonormal_basis(x_axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two unit vectors (y, z) completing x_axis to a right-handed frame."""
    x = np.asarray(x_axis, dtype=float)
    x = x / np.linalg.norm(x)
    ref = np.array([0.0, 0.0, 1.0]) if abs(x[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    z = ref - np.dot(ref, x) * x
    z /= np.linalg.norm(z)
    y = np.cross(z, x)
    return y, z
