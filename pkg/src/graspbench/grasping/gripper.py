"""
Parallel-jaw gripper model.

Gripper frame: origin at the tool centre point between the two pads, approach
along local +z, closing along local x. Finger pads are w (along y) by h (along z);
pad coordinates (u, v) are measured from the pad centre, v grows toward the
fingertip, so the distal edge sits at v = +h/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..errors import SchemaError, ValidationError
from ..geometry.convex import ConvexPiece
from ..geometry.transforms import Pose


@dataclass(frozen=True, eq=False)
class GripperSpec:
    name: str
    max_opening: float = 0.085
    finger_length: float = 0.048
    pad_width: float = 0.022
    pad_height: float = 0.038
    pregrasp_offset: float = 0.04
    finger_thickness: float = 0.008
    palm: Tuple[ConvexPiece, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.max_opening > 0:
            raise ValidationError(f"gripper '{self.name}': max_opening must be > 0")
        if not self.pregrasp_offset > 0:
            raise ValidationError(f"gripper '{self.name}': pregrasp_offset must be > 0")
        for key in ("finger_length", "pad_width", "pad_height", "finger_thickness"):
            if not getattr(self, key) > 0:
                raise ValidationError(f"gripper '{self.name}': {key} must be > 0")
        if self.pad_height > self.finger_length:
            raise ValidationError(f"gripper '{self.name}': pad_height exceeds finger_length")
        object.__setattr__(self, "palm", tuple(self.palm) or (self._default_palm(),))

    def _default_palm(self) -> ConvexPiece:
        z_top = self.pad_height / 2.0 - self.finger_length
        half = (self.max_opening / 2.0 + self.finger_thickness, self.pad_width, 0.02)
        return ConvexPiece.box(half, Pose.from_translation((0.0, 0.0, z_top - half[2])))

    # ---- geometry ----
    @property
    def pad_half(self) -> Tuple[float, float]:
        return self.pad_width / 2.0, self.pad_height / 2.0

    @property
    def finger_base_z(self) -> float:
        """z of the finger roots (palm face) in the gripper frame."""
        return self.pad_height / 2.0 - self.finger_length

    def finger_pieces(self, opening: float) -> Tuple[ConvexPiece, ConvexPiece]:
        """Left (-x) and right (+x) finger boxes with their inner faces `opening` apart."""
        t = self.finger_thickness
        half = (t / 2.0, self.pad_width / 2.0, self.finger_length / 2.0)
        zc = self.pad_height / 2.0 - self.finger_length / 2.0
        x = opening / 2.0 + t / 2.0
        left = ConvexPiece.box(half, Pose.from_translation((-x, 0.0, zc)))
        right = ConvexPiece.box(half, Pose.from_translation((x, 0.0, zc)))
        return left, right

    def pieces(self, opening: float) -> Tuple[ConvexPiece, ...]:
        """Full collision geometry (palm and both fingers) at a given opening."""
        return self.palm + self.finger_pieces(opening)

    def box_parts(self, opening: float) -> List[Tuple[Pose, np.ndarray]]:
        """Every part as (frame, half_extents), for box-triangle tests against meshes."""
        out = []
        for p in self.pieces(opening):
            if p.primitive != "box":
                raise ValidationError(f"gripper '{self.name}': mesh checks need box parts, got {p.primitive}")
            out.append((p.frame, np.asarray(p.params, dtype=float)))
        return out

    def pregrasp_pose(self, grasp_pose: Pose) -> Pose:
        return grasp_pose.compose(Pose.from_translation((0.0, 0.0, -self.pregrasp_offset)))

    # ---- serialization ----
    def to_dict(self) -> Dict[str, Any]:
        palm = []
        for p in self.palm:
            palm.append({"type": "box", "half_extents": list(p.params),
                         "translation": p.frame.translation.tolist(),
                         "rotation": p.frame.rotation.tolist()})
        return {
            "schema_version": 1,
            "name": self.name,
            "max_opening": self.max_opening,
            "finger_length": self.finger_length,
            "pad": {"width": self.pad_width, "height": self.pad_height},
            "pregrasp_offset": self.pregrasp_offset,
            "finger_thickness": self.finger_thickness,
            "palm": palm,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GripperSpec":
        allowed = {"schema_version", "name", "max_opening", "finger_length", "pad",
                   "pregrasp_offset", "finger_thickness", "palm"}
        for key in data:
            if key not in allowed:
                raise SchemaError(key, "unknown field")
        if data.get("schema_version", 1) != 1:
            raise SchemaError("schema_version", f"unsupported version {data.get('schema_version')!r}")
        try:
            pad = data.get("pad", {})
            palm: List[ConvexPiece] = []
            for i, part in enumerate(data.get("palm", [])):
                if part.get("type", "box") != "box":
                    raise SchemaError(f"palm[{i}].type", "only box parts are supported")
                frame = Pose(part.get("translation", (0.0, 0.0, 0.0)), part.get("rotation", (1.0, 0.0, 0.0, 0.0)))
                palm.append(ConvexPiece.box(part["half_extents"], frame))
            return cls(
                name=str(data["name"]),
                max_opening=float(data.get("max_opening", 0.085)),
                finger_length=float(data.get("finger_length", 0.048)),
                pad_width=float(pad.get("width", 0.022)),
                pad_height=float(pad.get("height", 0.038)),
                pregrasp_offset=float(data.get("pregrasp_offset", 0.04)),
                finger_thickness=float(data.get("finger_thickness", 0.008)),
                palm=tuple(palm),
            )
        except KeyError as e:
            raise SchemaError(str(e.args[0]), "missing field") from None
        except (TypeError, ValueError) as e:
            raise SchemaError("gripper", str(e)) from None


def default_gripper() -> GripperSpec:
    return GripperSpec("robotiq-2f85")


def pad_point(gripper: GripperSpec, side: int, opening: float, pad_uv: Sequence[float]) -> np.ndarray:
    """Contact location on the inner face of a pad, in the gripper frame (side -1 = left, +1 = right)."""
    u, v = float(pad_uv[0]), float(pad_uv[1])
    return np.array([side * opening / 2.0, u, v])
