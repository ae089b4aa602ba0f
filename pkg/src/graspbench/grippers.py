"""Built-in gripper profiles.

Profile structure (as package resources):
  graspbench/profiles/<name>/
    - profile.toml   (name, version, description, includes)
    - gripper.json   (GripperSpec document)

`load_gripper` accepts either a built-in profile name or a path to a gripper
JSON file on disk.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import importlib.resources as ilr

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib  # type: ignore[no-redef]

from .errors import SchemaError, ValidationError
from .grasping.gripper import GripperSpec


logger = logging.getLogger(__name__)

PROFILE_META = "profile.toml"
GRIPPER_FILE = "gripper.json"


# ---------- Helpers ----------

def _pkg_root() -> Optional[Any]:
    try:
        return ilr.files("graspbench.profiles")
    except ModuleNotFoundError:  # pragma: no cover
        return None


def _profile_dir(name: str) -> Optional[Any]:
    base = _pkg_root()
    if base is None or not name or "/" in name or name.startswith("."):
        return None
    return base.joinpath(name)


def _read_pkg_text(path: Any) -> Optional[str]:
    try:
        return path.read_text(encoding="utf-8")
    except (FileNotFoundError, NotADirectoryError, IsADirectoryError):
        return None


def _load_meta(pdir: Any) -> Dict[str, Any]:
    txt = _read_pkg_text(pdir.joinpath(PROFILE_META))
    if txt is None:
        return {}
    try:
        return tomllib.loads(txt)
    except tomllib.TOMLDecodeError as e:
        raise SchemaError(PROFILE_META, str(e)) from None


def _load_gripper_doc(text: str, origin: str) -> GripperSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{origin}: invalid JSON ({e.msg} at line {e.lineno})") from None
    if not isinstance(data, dict):
        raise SchemaError("gripper", "expected an object")
    return GripperSpec.from_dict(data)


# ---------- Public API ----------

def list_builtin_profiles() -> List[str]:
    """
    Enumerate built-in gripper profiles.
    Only directories that contain a profile.toml count (filters out __pycache__).
    """
    base = _pkg_root()
    if base is None:
        return []
    names: List[str] = []
    for child in base.iterdir():
        if child.is_dir() and child.joinpath(PROFILE_META).is_file():
            names.append(child.name)
    names.sort()
    return names


def show_profile(name: str) -> Dict[str, Any]:
    """Profile metadata plus the gripper document, or ok=False with an error."""
    result: Dict[str, Any] = {"ok": False, "name": name, "error": None}
    pdir = _profile_dir(name)
    if pdir is None or not pdir.is_dir():
        result["error"] = f"profile not found: {name}"
        return result
    meta = _load_meta(pdir)
    text = _read_pkg_text(pdir.joinpath(GRIPPER_FILE))
    if text is None:
        result["error"] = f"profile '{name}' has no {GRIPPER_FILE}"
        return result
    spec = _load_gripper_doc(text, f"{name}/{GRIPPER_FILE}")
    result.update({"ok": True, "meta": meta, "gripper": spec.to_dict()})
    return result


def load_gripper(name_or_path: Union[str, Path]) -> GripperSpec:
    """Resolve a built-in profile name first, then a file path."""
    key = str(name_or_path)
    pdir = _profile_dir(key)
    if pdir is not None and pdir.is_dir():
        text = _read_pkg_text(pdir.joinpath(GRIPPER_FILE))
        if text is None:
            raise ValidationError(f"profile '{key}' has no {GRIPPER_FILE}")
        logger.debug("gripper %s from built-in profile", key)
        return _load_gripper_doc(text, f"{key}/{GRIPPER_FILE}")
    path = Path(name_or_path)
    if not path.is_file():
        known = ", ".join(list_builtin_profiles()) or "none"
        raise ValidationError(f"unknown gripper '{key}' (built-in: {known})")
    logger.debug("gripper from %s", path)
    return _load_gripper_doc(path.read_text(encoding="utf-8"), str(path))


__all__ = ["list_builtin_profiles", "load_gripper", "show_profile"]
