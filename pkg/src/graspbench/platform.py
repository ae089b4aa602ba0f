"""
Platform utilities for graspbench.

- Paths for config, state/logs and the default settings file
- Environment overrides (GRASPBENCH_CONFIG)
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional


APP_NAME = "graspbench"
SETTINGS_FILENAME = "settings.ini"
LOG_FILENAME = "graspbench.log"
CONFIG_ENV = "GRASPBENCH_CONFIG"


def xdg_config_dir() -> Path:
    base = os.environ.get("XDG_CONFIG_HOME")
    if base:
        return Path(base) / APP_NAME
    return Path.home() / ".config" / APP_NAME


def xdg_state_dir() -> Path:
    base = os.environ.get("XDG_STATE_HOME")
    if base:
        return Path(base) / APP_NAME
    return Path.home() / ".local" / "state" / APP_NAME


def log_path() -> Path:
    return xdg_state_dir() / LOG_FILENAME


def settings_path(explicit: Optional[str] = None) -> Path:
    """
    Resolve the settings file: explicit path (--config) wins over
    $GRASPBENCH_CONFIG, which wins over the XDG default.
    """
    if explicit:
        return Path(explicit).expanduser()
    env = os.environ.get(CONFIG_ENV)
    if env:
        return Path(env).expanduser()
    return xdg_config_dir() / SETTINGS_FILENAME
