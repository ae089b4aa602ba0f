"""
Logging setup for graspbench.

- Logs to the console (stderr, so stdout stays machine readable) and to a file under the XDG state dir.
- Default level: INFO. Can be overridden via environment variable GRASPBENCH_LOG_LEVEL
  or explicitly by the caller (CLI -v / -q).
"""

from __future__ import annotations

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from .platform import xdg_state_dir, LOG_FILENAME


def setup_logging(level_name: Optional[str] = None, log_to_file: bool = True) -> logging.Logger:
    level_name = (level_name or os.environ.get("GRASPBENCH_LOG_LEVEL", "INFO")).upper()
    level = getattr(logging, level_name, logging.INFO)

    logger = logging.getLogger("graspbench")
    logger.setLevel(level)
    logger.propagate = False  # avoid duplicate logs

    # Clear existing handlers if any (idempotent setup)
    if logger.handlers:
        for h in list(logger.handlers):
            logger.removeHandler(h)
            h.close()

    fmt = logging.Formatter("%(asctime)s %(levelname)s [%(name)s] %(message)s")

    ch = logging.StreamHandler()
    ch.setLevel(level)
    ch.setFormatter(fmt)
    logger.addHandler(ch)

    if log_to_file:
        log_dir = xdg_state_dir()
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            fh = RotatingFileHandler(log_dir / LOG_FILENAME, maxBytes=1_000_000, backupCount=3)
            fh.setLevel(level)
            fh.setFormatter(fmt)
            logger.addHandler(fh)
        except OSError as e:
            # read-only home (CI sandboxes): console logging is enough
            logger.warning("file logging disabled: %s", e)

    logger.debug("Logging initialized at level %s", level_name)
    return logger
