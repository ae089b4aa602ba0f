"""
Run manifests.

Every output embeds a manifest (tool version, command, argv, input hashes, seed,
config snapshot). Wall-clock timings only go to the sidecar `<out>.manifest.json`
so that reruns produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence

from . import __version__
from .config import Settings, write_json_atomic
from .errors import SchemaError, ValidationError


logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".manifest.json"


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def strip_config_flag(argv: Sequence[str]) -> List[str]:
    """argv without --config PATH / --config=PATH (the snapshot replaces it)."""
    out: List[str] = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--config":
            skip = True
            continue
        if a.startswith("--config="):
            continue
        out.append(a)
    return out


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    inputs: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    config: Dict[str, Dict[str, str]] = field(default_factory=dict)
    tool_version: str = __version__
    timings: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def create(cls, command: str, argv: Sequence[str], inputs: Sequence[Path], seed: Optional[int],
               settings: Settings) -> "RunManifest":
        hashes = {}
        for p in inputs:
            hashes[str(p)] = sha256_file(Path(p))
        return cls(command, strip_config_flag(argv), hashes, seed, settings.as_mapping())

    def to_dict(self) -> Dict[str, Any]:
        """Embedded form: everything except timings."""
        return {
            "tool": "graspbench",
            "tool_version": self.tool_version,
            "command": self.command,
            "argv": list(self.argv),
            "inputs": dict(sorted(self.inputs.items())),
            "seed": self.seed,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunManifest":
        try:
            return cls(
                command=str(data["command"]),
                argv=[str(a) for a in data["argv"]],
                inputs={str(k): str(v) for k, v in data.get("inputs", {}).items()},
                seed=data.get("seed"),
                config={str(s): {str(k): str(v) for k, v in kv.items()} for s, kv in data.get("config", {}).items()},
                tool_version=str(data.get("tool_version", "")),
                timings={str(k): float(v) for k, v in data.get("timings", {}).items()},
            )
        except (KeyError, TypeError, AttributeError, ValueError) as e:
            raise SchemaError("manifest", f"malformed manifest ({e})") from None

    @contextmanager
    def timed(self, stage: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[stage] = round(time.perf_counter() - t0, 6)

    def stale_inputs(self, base: Optional[Path] = None) -> List[str]:
        """Inputs whose current hash differs from the recorded one (missing files included)."""
        bad = []
        for name, digest in sorted(self.inputs.items()):
            p = Path(name)
            if base is not None and not p.is_absolute() and not p.exists():
                p = base / p
            if not p.exists() or sha256_file(p) != digest:
                bad.append(name)
        return bad


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.name + SIDECAR_SUFFIX)


def write_sidecar(out: Path, manifest: RunManifest) -> Path:
    target = sidecar_path(out)
    data = manifest.to_dict()
    data["timings"] = dict(manifest.timings)
    data["output"] = out.name
    write_json_atomic(data, target)
    return target


def load_manifest(path: Path) -> RunManifest:
    """A sidecar file, or any output that embeds a manifest (JSON with `manifest`, or a JSONL header)."""
    text = Path(path).read_text(encoding="utf-8")
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    for candidate in (text, first):
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(data, dict):
            if "manifest" in data and isinstance(data["manifest"], dict):
                return RunManifest.from_dict(data["manifest"])
            if "command" in data and "argv" in data:
                return RunManifest.from_dict(data)
    raise ValidationError(f"{path}: no manifest found")


__all__ = [
    "RunManifest",
    "load_manifest",
    "sha256_file",
    "sidecar_path",
    "strip_config_flag",
    "write_sidecar",
]
