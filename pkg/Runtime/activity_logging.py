"""
ACTIVITY LOGGING
================
Structured key=value logging for simulation runs.

FLOW:
- get_logger() hands every module a child of the "heisenwave" logger.
- log_event() writes one key=value record and bumps the event counter.

HOW:
- A single RotatingFileHandler under LOG_DIR is attached to the root
  "heisenwave" logger on first use.
"""

from __future__ import annotations

import logging
import os
from logging.handlers import RotatingFileHandler

from Runtime.metrics import increment_event
from Runtime.runtime_config import RUNTIME_SETTINGS

_ROOT_NAME = "heisenwave"


def _configure_root() -> logging.Logger:
    root = logging.getLogger(_ROOT_NAME)
    if root.handlers:
        return root

    log_dir = RUNTIME_SETTINGS["LOG_DIR"]
    try:
        os.makedirs(log_dir, exist_ok=True)
        handler: logging.Handler = RotatingFileHandler(
            os.path.join(log_dir, "heisenwave.log"), maxBytes=2_000_000, backupCount=3
        )
    except OSError:
        # read-only checkouts still get logs on stderr
        handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s %(message)s"))

    root.setLevel(getattr(logging, RUNTIME_SETTINGS["LOG_LEVEL"], logging.INFO))
    root.addHandler(handler)
    return root


def get_logger(name: str) -> logging.Logger:
    _configure_root()
    return logging.getLogger(f"{_ROOT_NAME}.{name}")


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def log_event(logger: logging.Logger, event: str, level: int = logging.INFO, **fields) -> None:
    increment_event(event)
    if not logger.isEnabledFor(level):
        return
    parts = [f"event={event}"] + [f"{key}={_format_value(val)}" for key, val in fields.items()]
    logger.log(level, " ".join(parts))
