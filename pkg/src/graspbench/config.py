"""
Configuration loading for graspbench.

- settings.ini in the XDG config dir (~/.config/graspbench/settings.ini),
  or the file named by $GRASPBENCH_CONFIG / --config.

Provides:
- DEFAULT_SETTINGS, preloaded before the user file is read (every key always resolves).
- Settings (INI) as a lightweight typed wrapper.
- Atomic writers for INI and JSON files.

The typed per-module views (PhysicsConfig, QAConfig, IkParams, ...) live next to the
code that uses them and are built with their `from_settings(settings)` classmethods.
"""

from __future__ import annotations

import configparser
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ConfigError
from .platform import settings_path


DEFAULT_SETTINGS: Dict[str, Dict[str, str]] = {
    "grasp": {
        "gripper": "robotiq-2f85",
        "samples": "20000",
        "pair_budget": "2000",
        "friction_angle_deg": "15",
        "rolls": "8",
        "pad_depth_samples": "3",
        "thin_threshold": "0.012",
        "max_grasps": "1000",
        "rot_weight": "0.05",
        "clearance": "0.005",
        "trajectory_samples": "10",
        "oversample": "2",
    },
    "verify": {
        "closing_force": "40",
        "slip_threshold": "0.005",
        "linear_offset": "0.01",
        "angular_offset_deg": "10",
        "hold_duration": "0.25",
        "move_duration": "0.25",
        "lift_height": "0.10",
        "lift_min": "0.05",
        "actuation_min_fraction": "0.70",
        "actuation_force": "10",
        "contact_tolerance": "0.001",
    },
    "physics": {
        "dt": "0.002",
        "solver_iterations": "20",
        "baumgarte": "0.2",
        "penetration_slop": "0.0005",
        "friction": "0.8",
        "restitution": "0.0",
        "sleep_linear": "1e-4",
        "sleep_angular": "1e-3",
        "sleep_time": "0.5",
        "sweep_steps": "200",
        "sweep_tolerance": "0.001",
        "contact_margin": "0.005",
    },
    "qa": {
        "settle_duration": "20",
        "jitter_window": "2",
        "jitter_threshold": "0.01",
        "lift_force_factor": "2",
        "lift_duration": "2",
        "lift_min": "0.05",
        "articulation_min_fraction": "0.70",
        "intersection_depth": "0.002",
        "site": "aabb",
    },
    "ik": {
        "max_iters": "100",
        "lambda0": "1e-3",
        "lambda_decrease": "0.5",
        "lambda_increase": "4",
        "lambda_min": "1e-9",
        "lambda_max": "1e3",
        "position_tolerance": "1e-6",
        "orientation_tolerance": "1e-6",
        "null_space_gain": "0.0",
        "step_clamp": "0.5",
    },
    "bench": {
        "pick_lift": "0.01",
        "pick_support_max": "0.05",
        "place_support": "0.5",
        "place_receptacle_shift": "0.10",
        "place_receptacle_rotation_deg": "45",
        "next_to_gap": "0.05",
        "next_to_receptacle_shift": "0.05",
        "next_to_receptacle_rotation_deg": "45",
        "open_fraction": "0.15",
        "close_fraction": "0.15",
        "open_door_fraction": "0.67",
        "navigate_distance": "1.5",
        "navigate_metric": "horizontal",
        "visibility_samples": "64",
        "min_visible_fraction": "0.1",
        "support_window": "0.5",
        "credible_level": "0.95",
    },
}


@dataclass
class Settings:
    config: configparser.ConfigParser
    path: Path

    def get(self, section: str, key: str, fallback: Optional[str] = None) -> str:
        value = self.config.get(section, key, fallback=fallback)
        if value is None:
            raise ConfigError(f"{section}.{key}: missing")
        return value  # type: ignore[no-any-return]

    def getint(self, section: str, key: str) -> int:
        try:
            return self.config.getint(section, key)
        except (ValueError, configparser.Error) as e:
            raise ConfigError(f"{section}.{key}: {e}") from None

    def getfloat(self, section: str, key: str) -> float:
        try:
            value = self.config.getfloat(section, key)
        except (ValueError, configparser.Error) as e:
            raise ConfigError(f"{section}.{key}: {e}") from None
        if not math.isfinite(value):
            raise ConfigError(f"{section}.{key}: must be finite")
        return value

    def getboolean(self, section: str, key: str) -> bool:
        try:
            return self.config.getboolean(section, key)
        except (ValueError, configparser.Error) as e:
            raise ConfigError(f"{section}.{key}: {e}") from None

    def as_mapping(self) -> Dict[str, Dict[str, str]]:
        # Nested dict, used for the manifest config snapshot
        mapping: Dict[str, Dict[str, str]] = {}
        for section in sorted(self.config.sections()):
            mapping[section] = {k: v for k, v in sorted(self.config.items(section))}
        return mapping


def _parser_with_defaults() -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    for section, kv in DEFAULT_SETTINGS.items():
        parser.add_section(section)
        for k, v in kv.items():
            parser.set(section, k, v)
    return parser


def load_settings(path: Optional[str] = None) -> Settings:
    """
    Load settings with defaults preloaded. A missing file is not an error
    for the implicit locations; an explicit --config path must exist.
    """
    ini_path = settings_path(path)
    parser = _parser_with_defaults()
    if ini_path.exists():
        try:
            parser.read(ini_path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError(f"{ini_path}: {e}") from None
    elif path:
        raise ConfigError(f"{ini_path}: config file does not exist")
    return Settings(parser, ini_path)


def default_settings() -> Settings:
    """Defaults only, no file lookup. Used by library entry points and tests."""
    return Settings(_parser_with_defaults(), Path(os.devnull))


def settings_from_mapping(mapping: Dict[str, Dict[str, Any]]) -> Settings:
    """Rebuild settings from a manifest config snapshot."""
    parser = _parser_with_defaults()
    for section, kv in mapping.items():
        if not parser.has_section(section):
            parser.add_section(section)
        for k, v in kv.items():
            parser.set(section, str(k), str(v))
    return Settings(parser, Path(os.devnull))


def require_positive(section: str, key: str, value: float) -> float:
    if not value > 0:
        raise ConfigError(f"{section}.{key}: must be > 0 (got {value})")
    return value


def require_fraction(section: str, key: str, value: float) -> float:
    if not 0.0 < value <= 1.0:
        raise ConfigError(f"{section}.{key}: must be in (0, 1] (got {value})")
    return value


# --------- Atomic writers ---------

def write_text_atomic(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", encoding="utf-8", delete=False, dir=path.parent,
                                     prefix=path.name + ".", newline="\n") as tf:
        tf.write(payload)
        tf.flush()
        os.fsync(tf.fileno())
        tmpname = tf.name
    os.replace(tmpname, path)


def write_json_atomic(data: Any, path: Path) -> None:
    write_text_atomic(path, json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def write_settings(settings: Settings, path: Optional[Path] = None) -> Path:
    target = path or settings.path
    target.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", encoding="utf-8", delete=False, dir=target.parent,
                                     prefix=target.name + ".") as tf:
        settings.config.write(tf)
        tf.flush()
        os.fsync(tf.fileno())
        tmpname = tf.name
    os.replace(tmpname, target)
    return target
