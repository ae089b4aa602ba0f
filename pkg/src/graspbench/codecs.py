"""
JSON codecs for every file the CLI reads or writes.

All structured files carry `schema_version: 1`. Unknown fields are rejected with
a SchemaError naming the JSON path of the field (e.g. `bodies[3].mass`).
Grasp and verification files are JSON Lines: one header record, then one record
per grasp.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import write_text_atomic
from .errors import SchemaError, ValidationError
from .geometry.convex import ConvexPiece
from .geometry.mesh import TriangleMesh, load_mesh
from .geometry.shapes import merge_meshes
from .geometry.transforms import Pose
from .grasping.sampling import ContactPair, GraspCandidate, GraspFlags
from .grasping.verify import VerificationResult
from .kinematics import ChainJoint, KinematicChain
from .physics.scene import BodySpec, JointSpec, SceneGraph
from .bench.episode import Camera, ContactImpulse, EpisodeState, Snapshot, TaskObjects, TaskSpec


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PathLike = Union[str, Path]


# ---------- Generic reading ----------

class _Node:
    """A JSON value together with its path, for error messages."""

    def __init__(self, value: Any, path: str = "") -> None:
        self.value = value
        self.path = path

    def _sub(self, key: Union[str, int]) -> str:
        if isinstance(key, int):
            return f"{self.path}[{key}]"
        return f"{self.path}.{key}" if self.path else key

    def error(self, message: str) -> SchemaError:
        return SchemaError(self.path or "$", message)

    def obj(self, required: Sequence[str] = (), optional: Sequence[str] = ()) -> "_Node":
        if not isinstance(self.value, dict):
            raise self.error("expected an object")
        allowed = set(required) | set(optional)
        for key in self.value:
            if key not in allowed:
                raise SchemaError(self._sub(key), "unknown field")
        for key in required:
            if key not in self.value:
                raise SchemaError(self._sub(key), "missing required field")
        return self

    def has(self, key: str) -> bool:
        return isinstance(self.value, dict) and key in self.value and self.value[key] is not None

    def __getitem__(self, key: Union[str, int]) -> "_Node":
        return _Node(self.value[key], self._sub(key))

    def get(self, key: str, default: Any = None) -> "_Node":
        if self.has(key):
            return self[key]
        return _Node(default, self._sub(key))

    def items(self) -> List["_Node"]:
        if not isinstance(self.value, list):
            raise self.error("expected a list")
        return [self[i] for i in range(len(self.value))]

    def keys(self) -> List[str]:
        if not isinstance(self.value, dict):
            raise self.error("expected an object")
        return list(self.value)

    def text(self) -> str:
        if not isinstance(self.value, str) or not self.value:
            raise self.error("expected a nonempty string")
        return self.value

    def flag(self) -> bool:
        if not isinstance(self.value, bool):
            raise self.error("expected true or false")
        return self.value

    def integer(self, minimum: Optional[int] = None) -> int:
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise self.error("expected an integer")
        if minimum is not None and self.value < minimum:
            raise self.error(f"must be >= {minimum}")
        return self.value

    def number(self, positive: bool = False, nonneg: bool = False) -> float:
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise self.error("expected a number")
        v = float(self.value)
        if not math.isfinite(v):
            raise self.error("must be finite")
        if positive and not v > 0:
            raise self.error("must be > 0")
        if nonneg and v < 0:
            raise self.error("must be >= 0")
        return v

    def vector(self, n: Optional[int] = None) -> np.ndarray:
        items = self.items()
        if n is not None and len(items) != n:
            raise self.error(f"expected {n} numbers")
        return np.array([i.number() for i in items], dtype=float)

    def matrix(self, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
        out = [r.vector(cols) for r in self.items()]
        if rows is not None and len(out) != rows:
            raise self.error(f"expected {rows} rows")
        if not out:
            raise self.error("expected a nonempty list")
        return np.stack(out)


def _check_version(node: _Node) -> None:
    if node.has("schema_version"):
        v = node["schema_version"].integer()
        if v != SCHEMA_VERSION:
            raise SchemaError(node._sub("schema_version"), f"unsupported version {v}")


def read_json(path: PathLike) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, fixed separators, so equal data gives equal bytes."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(data: Any, path: PathLike) -> None:
    write_text_atomic(Path(path), dumps(data))


def write_jsonl(records: Iterable[Mapping[str, Any]], path: PathLike) -> None:
    lines = [json.dumps(r, sort_keys=True, separators=(",", ":"), allow_nan=False) for r in records]
    write_text_atomic(Path(path), "\n".join(lines) + "\n")


def read_jsonl(path: PathLike) -> Iterator[Tuple[int, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}: invalid JSON on line {lineno} ({e.msg})") from None


# ---------- Poses ----------

def pose_to_dict(pose: Pose) -> Dict[str, List[float]]:
    return {"translation": pose.translation.tolist(), "rotation": pose.rotation.tolist()}


def _pose(node: _Node) -> Pose:
    node.obj(optional=("translation", "rotation"))
    t = node["translation"].vector(3) if node.has("translation") else np.zeros(3)
    q = node["rotation"].vector(4) if node.has("rotation") else np.array([1.0, 0.0, 0.0, 0.0])
    try:
        return Pose(t, q)
    except ValidationError as e:
        raise node.error(str(e)) from None


def pose_from_dict(data: Mapping[str, Any], path: str = "pose") -> Pose:
    return _pose(_Node(data, path))


# ---------- Scenes ----------

def _collider(node: _Node, base_dir: Optional[Path]) -> Tuple[ConvexPiece, Optional[TriangleMesh]]:
    if not isinstance(node.value, dict) or "type" not in node.value:
        raise node.error("collider needs a type")
    kind = node["type"].text()
    try:
        if kind == "box":
            node.obj(("type", "half_extents"), ("pose",))
            frame = _pose(node["pose"]) if node.has("pose") else None
            return ConvexPiece.box(node["half_extents"].vector(3), frame), None
        if kind == "sphere":
            node.obj(("type", "radius"), ("pose",))
            frame = _pose(node["pose"]) if node.has("pose") else None
            return ConvexPiece.sphere(node["radius"].number(positive=True), frame), None
        if kind == "capsule":
            node.obj(("type", "radius", "half_length"), ("pose",))
            frame = _pose(node["pose"]) if node.has("pose") else None
            return ConvexPiece.capsule(node["radius"].number(positive=True),
                                       node["half_length"].number(positive=True), frame), None
        if kind == "hull":
            node.obj(("type", "points"), ("radius",))
            radius = node["radius"].number(nonneg=True) if node.has("radius") else 0.0
            return ConvexPiece.hull(node["points"].matrix(cols=3), radius), None
        if kind == "mesh":
            node.obj(("type", "path"))
            rel = Path(node["path"].text())
            mesh_path = rel if rel.is_absolute() or base_dir is None else base_dir / rel
            mesh = load_mesh(mesh_path, role="collider")
            return ConvexPiece.hull(mesh.vertices), mesh
    except SchemaError:
        raise
    except ValidationError as e:
        raise node.error(str(e)) from None
    raise SchemaError(node._sub("type"), f"unknown collider type {kind!r}")


def collider_to_dict(piece: ConvexPiece) -> Dict[str, Any]:
    frame = None if piece.frame == Pose.identity() else pose_to_dict(piece.frame)
    if piece.primitive == "box":
        out: Dict[str, Any] = {"type": "box", "half_extents": list(piece.params)}
    elif piece.primitive == "sphere":
        out = {"type": "sphere", "radius": piece.params[0]}
    elif piece.primitive == "capsule":
        out = {"type": "capsule", "radius": piece.params[0], "half_length": piece.params[1]}
    else:
        out = {"type": "hull", "points": piece.vertices.tolist()}
        if piece.radius:
            out["radius"] = piece.radius
        return out
    if frame is not None:
        out["pose"] = frame
    return out


_BODY_REQUIRED = ("id", "mobility", "colliders")
_BODY_OPTIONAL = ("mass", "inertia", "friction", "category", "pose", "contact_preload", "initial_velocity")


def _body(node: _Node, base_dir: Optional[Path]) -> BodySpec:
    node.obj(_BODY_REQUIRED, _BODY_OPTIONAL)
    pieces, meshes = [], []
    for c in node["colliders"].items():
        piece, mesh = _collider(c, base_dir)
        pieces.append(piece)
        if mesh is not None:
            meshes.append(mesh)
    kw: Dict[str, Any] = {}
    if node.has("mass"):
        kw["mass"] = node["mass"].number()
    if node.has("inertia"):
        kw["inertia"] = node["inertia"].matrix(3, 3)
    if node.has("friction"):
        kw["friction"] = node["friction"].number(nonneg=True)
    if node.has("category"):
        kw["category"] = node["category"].text()
    if node.has("pose"):
        kw["initial_pose"] = _pose(node["pose"])
    if node.has("contact_preload"):
        kw["contact_preload"] = node["contact_preload"].number(nonneg=True)
    if node.has("initial_velocity"):
        v = node["initial_velocity"].obj(("linear", "angular"))
        kw["initial_velocity"] = (v["linear"].vector(3), v["angular"].vector(3))
    if meshes:
        kw["mesh"] = meshes[0] if len(meshes) == 1 else merge_meshes(meshes, role="collider")
    try:
        return BodySpec(node["id"].text(), node["mobility"].text(), tuple(pieces), **kw)
    except ValidationError as e:
        raise node.error(str(e)) from None


def _joint(node: _Node) -> JointSpec:
    node.obj(("id", "parent", "child", "kind", "axis", "anchor", "range"), ("initial",))
    rng = node["range"].vector(2)
    initial = node["initial"].number() if node.has("initial") else None
    try:
        return JointSpec(node["id"].text(), node["parent"].text(), node["child"].text(), node["kind"].text(),
                         node["axis"].vector(3), node["anchor"].vector(3), (rng[0], rng[1]), initial)
    except ValidationError as e:
        raise node.error(str(e)) from None


def _scene(node: _Node, base_dir: Optional[Path]) -> SceneGraph:
    node.obj(("bodies",), ("schema_version", "gravity", "joints"))
    _check_version(node)
    bodies = tuple(_body(b, base_dir) for b in node["bodies"].items())
    joints = tuple(_joint(j) for j in node["joints"].items()) if node.has("joints") else ()
    kw = {"gravity": node["gravity"].vector(3)} if node.has("gravity") else {}
    try:
        return SceneGraph(bodies, joints, **kw)
    except SchemaError:
        raise
    except ValidationError as e:
        raise node.error(str(e)) from None


def scene_from_dict(data: Mapping[str, Any], base_dir: Optional[PathLike] = None) -> SceneGraph:
    return _scene(_Node(data), Path(base_dir) if base_dir is not None else None)


def load_scene(path: PathLike) -> SceneGraph:
    p = Path(path)
    return scene_from_dict(read_json(p), p.parent)


def body_to_dict(body: BodySpec) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "id": body.id,
        "mobility": body.mobility,
        "colliders": [collider_to_dict(c) for c in body.colliders],
        "pose": pose_to_dict(body.initial_pose),
        "friction": body.friction,
    }
    if body.is_free:
        out["mass"] = body.mass
        out["inertia"] = np.asarray(body.inertia).tolist()
    if body.category is not None:
        out["category"] = body.category
    if body.contact_preload:
        out["contact_preload"] = body.contact_preload
    if body.initial_velocity is not None:
        lin, ang = body.initial_velocity
        out["initial_velocity"] = {"linear": lin.tolist(), "angular": ang.tolist()}
    return out


def joint_to_dict(joint: JointSpec) -> Dict[str, Any]:
    return {"id": joint.id, "parent": joint.parent, "child": joint.child, "kind": joint.kind,
            "axis": joint.axis.tolist(), "anchor": joint.anchor.tolist(), "range": list(joint.range),
            "initial": joint.initial}


def scene_to_dict(scene: SceneGraph) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "gravity": np.asarray(scene.gravity, float).tolist(),
        "bodies": [body_to_dict(b) for b in scene.bodies],
        "joints": [joint_to_dict(j) for j in scene.joints],
    }


# ---------- Grasps ----------

_GRASP_FIELDS = ("kind", "object_id", "grasp_id", "translation", "rotation", "width", "p1", "p2", "n1", "n2",
                 "pad_uv", "roll_index", "bias_score", "flags")
_RESULT_FIELDS = ("rigid_robust", "actuation_ok", "in_situ", "failure_reason", "success")


def grasp_to_record(c: GraspCandidate, object_id: str, grasp_id: int) -> Dict[str, Any]:
    k = c.contacts
    return {
        "kind": "grasp",
        "object_id": object_id,
        "grasp_id": grasp_id,
        "translation": c.pose.translation.tolist(),
        "rotation": c.pose.rotation.tolist(),
        "width": c.width,
        "p1": k.p1.tolist(),
        "p2": k.p2.tolist(),
        "n1": k.n1.tolist(),
        "n2": k.n2.tolist(),
        "pad_uv": list(k.pad_uv),
        "roll_index": c.roll_index,
        "bias_score": c.bias_score,
        "flags": c.flags.as_dict(),
    }


def _flag(node: _Node, key: str) -> Optional[bool]:
    return node[key].flag() if node.has(key) else None


def grasp_from_record(data: Mapping[str, Any], path: str = "") -> Tuple[str, int, GraspCandidate]:
    node = _Node(data, path).obj(_GRASP_FIELDS, _RESULT_FIELDS)
    if node["kind"].text() != "grasp":
        raise SchemaError(node._sub("kind"), "expected 'grasp'")
    try:
        pose = Pose(node["translation"].vector(3), node["rotation"].vector(4))
    except ValidationError as e:
        raise node.error(str(e)) from None
    uv = node["pad_uv"].vector(2)
    pair = ContactPair(node["p1"].vector(3), node["p2"].vector(3), node["n1"].vector(3), node["n2"].vector(3),
                       (float(uv[0]), float(uv[1])))
    flags_node = node["flags"].obj(optional=("collision_free_isolated", "robust", "in_situ_ok"))
    flags = GraspFlags(_flag(flags_node, "collision_free_isolated"), _flag(flags_node, "robust"),
                       _flag(flags_node, "in_situ_ok"))
    cand = GraspCandidate(pose, pair, node["roll_index"].integer(minimum=0), node["bias_score"].number(), flags)
    return node["object_id"].text(), node["grasp_id"].integer(minimum=0), cand


def header_record(manifest: Mapping[str, Any], metadata: Mapping[str, Any],
                  counters: Mapping[str, int]) -> Dict[str, Any]:
    return {"kind": "header", "schema_version": SCHEMA_VERSION, "manifest": dict(manifest),
            "metadata": dict(metadata), "counters": dict(counters)}


def read_grasp_file(path: PathLike) -> Tuple[Dict[str, Any], List[Tuple[str, int, GraspCandidate]]]:
    header: Optional[Dict[str, Any]] = None
    grasps = []
    for lineno, rec in read_jsonl(path):
        where = f"line {lineno}"
        if not isinstance(rec, dict):
            raise SchemaError(where, "expected an object")
        if rec.get("kind") == "header":
            if header is not None:
                raise SchemaError(where, "duplicate header")
            node = _Node(rec, where).obj(("kind", "schema_version"), ("manifest", "metadata", "counters"))
            _check_version(node)
            header = rec
            continue
        grasps.append(grasp_from_record(rec, where))
    if header is None:
        raise SchemaError("line 1", "missing header record")
    return header, grasps


def verification_record(c: GraspCandidate, object_id: str, grasp_id: int,
                        result: VerificationResult) -> Dict[str, Any]:
    rec = grasp_to_record(c, object_id, grasp_id)
    res = result.as_dict()
    res.pop("grasp_id", None)
    rec.update(res)
    rec["success"] = result.success
    return rec


# ---------- Chains and targets ----------

def _chain_joint(node: _Node) -> ChainJoint:
    node.obj(("name", "kind", "axis", "anchor", "limits"), ("rotation",))
    lim = node["limits"].vector(2)
    kw = {"rotation": node["rotation"].vector(4)} if node.has("rotation") else {}
    try:
        return ChainJoint(node["name"].text(), node["kind"].text(), node["axis"].vector(3),
                          node["anchor"].vector(3), (lim[0], lim[1]), **kw)
    except ValidationError as e:
        raise node.error(str(e)) from None


def chain_from_dict(data: Mapping[str, Any]) -> KinematicChain:
    node = _Node(data).obj(("name", "joints"), ("schema_version", "ee_offset", "q_rest"))
    _check_version(node)
    joints = tuple(_chain_joint(j) for j in node["joints"].items())
    ee = _pose(node["ee_offset"]) if node.has("ee_offset") else Pose.identity()
    rest = node["q_rest"].vector() if node.has("q_rest") else None
    try:
        return KinematicChain(node["name"].text(), joints, ee, rest)
    except ValidationError as e:
        raise node.error(str(e)) from None


def chain_to_dict(chain: KinematicChain) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": chain.name,
        "joints": [{"name": j.name, "kind": j.kind, "axis": j.axis.tolist(), "anchor": j.anchor.tolist(),
                    "rotation": j.rotation.tolist(), "limits": list(j.limits)} for j in chain.joints],
        "ee_offset": pose_to_dict(chain.ee_offset),
    }
    if chain.q_rest is not None:
        out["q_rest"] = np.asarray(chain.q_rest).tolist()
    return out


def load_chain(path: PathLike) -> KinematicChain:
    return chain_from_dict(read_json(path))


def targets_from_dict(data: Mapping[str, Any]) -> Tuple[List[Pose], Optional[List[np.ndarray]]]:
    node = _Node(data).obj(("targets",), ("schema_version", "seeds"))
    _check_version(node)
    targets = [_pose(t) for t in node["targets"].items()]
    seeds = [s.vector() for s in node["seeds"].items()] if node.has("seeds") else None
    if seeds is not None and len(seeds) != len(targets):
        raise SchemaError("seeds", f"{len(seeds)} seeds for {len(targets)} targets")
    return targets, seeds


def targets_to_dict(targets: Sequence[Pose], seeds: Optional[Sequence[Sequence[float]]] = None) -> Dict[str, Any]:
    out: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "targets": [pose_to_dict(t) for t in targets]}
    if seeds is not None:
        out["seeds"] = [np.asarray(s, float).tolist() for s in seeds]
    return out


# ---------- Episodes and tasks ----------

def _camera(node: _Node) -> Camera:
    node.obj(("pose", "fx", "fy", "cx", "cy", "width", "height"), ("near",))
    kw = {"near": node["near"].number(positive=True)} if node.has("near") else {}
    try:
        return Camera(_pose(node["pose"]), node["fx"].number(positive=True), node["fy"].number(positive=True),
                      node["cx"].number(), node["cy"].number(), node["width"].integer(minimum=1),
                      node["height"].integer(minimum=1), **kw)
    except ValidationError as e:
        raise node.error(str(e)) from None


def _snapshot(node: _Node) -> Snapshot:
    node.obj(("time",), ("bodies", "joints", "contacts"))
    poses = {}
    if node.has("bodies"):
        bodies = node["bodies"]
        for key in bodies.keys():
            poses[key] = _pose(bodies[key])
    joints = {}
    if node.has("joints"):
        jn = node["joints"]
        for key in jn.keys():
            joints[key] = jn[key].number()
    contacts = []
    if node.has("contacts"):
        for c in node["contacts"].items():
            c.obj(("a", "b", "impulse"))
            contacts.append(ContactImpulse(c["a"].text(), c["b"].text(), c["impulse"].vector(3)))
    return Snapshot(node["time"].number(), poses, joints, tuple(contacts))


def snapshot_to_dict(snap: Snapshot) -> Dict[str, Any]:
    return {
        "time": snap.time,
        "bodies": {k: pose_to_dict(p) for k, p in sorted(snap.poses.items())},
        "joints": {k: float(v) for k, v in sorted(snap.joint_q.items())},
        "contacts": [{"a": c.body_a, "b": c.body_b, "impulse": np.asarray(c.impulse).tolist()}
                     for c in snap.contacts],
    }


def episode_from_dict(data: Mapping[str, Any], base_dir: Optional[PathLike] = None) -> EpisodeState:
    node = _Node(data).obj(("scene", "task_objects", "snapshots"),
                           ("schema_version", "camera", "robot_base", "declared_done", "dt", "support"))
    _check_version(node)
    base = Path(base_dir) if base_dir is not None else None
    scene_node = node["scene"]
    if isinstance(scene_node.value, str):
        rel = Path(scene_node.value)
        scene_path = rel if rel.is_absolute() or base is None else base / rel
        scene = load_scene(scene_path)
    else:
        scene = _scene(scene_node, base)
    to = node["task_objects"].obj(("object",), ("receptacle", "joint", "distractors", "holders"))
    objects = TaskObjects(
        to["object"].text(),
        to["receptacle"].text() if to.has("receptacle") else None,
        to["joint"].text() if to.has("joint") else None,
        tuple(d.text() for d in to["distractors"].items()) if to.has("distractors") else (),
        tuple(h.text() for h in to["holders"].items()) if to.has("holders") else (),
    )
    snaps = tuple(_snapshot(s) for s in node["snapshots"].items())
    kw: Dict[str, Any] = {}
    if node.has("camera"):
        kw["camera"] = _camera(node["camera"])
    if node.has("robot_base"):
        kw["robot_base"] = node["robot_base"].vector(3)
    if node.has("declared_done"):
        kw["declared_done"] = node["declared_done"].flag()
    if node.has("dt"):
        kw["dt"] = node["dt"].number(positive=True)
    if node.has("support"):
        sup = node["support"]
        kw["support"] = {b: {s: sup[b][s].number(nonneg=True) for s in sup[b].keys()} for b in sup.keys()}
    try:
        return EpisodeState(scene, objects, snaps, **kw)
    except SchemaError:
        raise
    except ValidationError as e:
        raise node.error(str(e)) from None


def load_episode(path: PathLike) -> EpisodeState:
    p = Path(path)
    return episode_from_dict(read_json(p), p.parent)


def episode_to_dict(ep: EpisodeState) -> Dict[str, Any]:
    o = ep.objects
    objects: Dict[str, Any] = {"object": o.object}
    if o.receptacle is not None:
        objects["receptacle"] = o.receptacle
    if o.joint is not None:
        objects["joint"] = o.joint
    if o.distractors:
        objects["distractors"] = list(o.distractors)
    if o.holders:
        objects["holders"] = list(o.holders)
    out: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "scene": scene_to_dict(ep.scene),
        "task_objects": objects,
        "declared_done": ep.declared_done,
        "dt": ep.dt,
        "snapshots": [snapshot_to_dict(s) for s in ep.snapshots],
    }
    if ep.camera is not None:
        c = ep.camera
        out["camera"] = {"pose": pose_to_dict(c.pose), "fx": c.fx, "fy": c.fy, "cx": c.cx, "cy": c.cy,
                         "width": c.width, "height": c.height, "near": c.near}
    if ep.robot_base is not None:
        out["robot_base"] = np.asarray(ep.robot_base, float).tolist()
    if ep.support is not None:
        out["support"] = {b: dict(row) for b, row in ep.support.items()}
    return out


def task_from_dict(data: Mapping[str, Any]) -> TaskSpec:
    node = _Node(data).obj(("kind",), ("schema_version", "instruction", "params"))
    _check_version(node)
    params = {}
    if node.has("params"):
        pn = node["params"]
        for key in pn.keys():
            value = pn[key].value
            params[key] = value if isinstance(value, str) else pn[key].number(positive=True)
    instruction = node["instruction"].value if node.has("instruction") else ""
    if not isinstance(instruction, str):
        raise SchemaError("instruction", "expected a string")
    try:
        return TaskSpec(node["kind"].text(), params, instruction)
    except ValidationError as e:
        raise SchemaError("kind", str(e)) from None


def task_to_dict(task: TaskSpec) -> Dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, "kind": task.kind, "instruction": task.instruction,
            "params": dict(task.params)}


# ---------- Success-rate files (report) ----------

def rates_from_dict(data: Mapping[str, Any]) -> Dict[str, float]:
    """{key: rate} or {key: {successes, trials}} under `results`."""
    node = _Node(data).obj(("results",), ("schema_version",))
    _check_version(node)
    res = node["results"]
    out = {}
    for key in res.keys():
        item = res[key]
        if isinstance(item.value, dict):
            item.obj(("successes", "trials"))
            n = item["trials"].integer(minimum=1)
            k = item["successes"].integer(minimum=0)
            if k > n:
                raise SchemaError(item._sub("successes"), "more successes than trials")
            out[key] = k / n
        else:
            v = item.number()
            if not 0.0 <= v <= 1.0:
                raise item.error("rate must be in [0, 1]")
            out[key] = v
    return out


def rate_counts_from_dict(data: Mapping[str, Any]) -> Dict[str, Tuple[int, int]]:
    """Only the {successes, trials} entries of a results file."""
    node = _Node(data).obj(("results",), ("schema_version",))
    res = node["results"]
    out = {}
    for key in res.keys():
        item = res[key]
        if isinstance(item.value, dict):
            item.obj(("successes", "trials"))
            out[key] = (item["successes"].integer(minimum=0), item["trials"].integer(minimum=1))
    return out


__all__ = [
    "SCHEMA_VERSION",
    "chain_from_dict",
    "chain_to_dict",
    "dumps",
    "episode_from_dict",
    "episode_to_dict",
    "grasp_from_record",
    "grasp_to_record",
    "header_record",
    "load_chain",
    "load_episode",
    "load_scene",
    "pose_from_dict",
    "pose_to_dict",
    "rate_counts_from_dict",
    "rates_from_dict",
    "read_grasp_file",
    "read_json",
    "read_jsonl",
    "scene_from_dict",
    "scene_to_dict",
    "targets_from_dict",
    "targets_to_dict",
    "task_from_dict",
    "task_to_dict",
    "verification_record",
    "write_json",
    "write_jsonl",
]
