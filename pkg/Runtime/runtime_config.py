"""
RUNTIME CONFIG
==============
Centralized process settings loaded from environment.
"""

# FLOW:
# - Read env vars once and expose RUNTIME_SETTINGS.
# WHY:
# - Keeps log, metrics and quadrature tuning per environment.
# HOW:
# - Loads the env file picked by HEISENWAVE_ENV, then reads typed values.

from __future__ import annotations

import logging
import os

import dotenv


def get_bool(name: str, default: bool = False) -> bool:
    return os.getenv(name, str(default)).strip().lower() in {"true", "1", "yes"}


def get_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except ValueError:
        return default


def _env_name() -> str:
    env = os.getenv("HEISENWAVE_ENV", "").strip().lower()
    if env in {"ci", "test"}:
        return ".env.ci"
    return ".env.localhost"


def _env_path() -> str:
    root = os.path.dirname(os.path.dirname(__file__))
    return os.path.join(root, _env_name())


dotenv.load_dotenv(_env_path())

# Optional startup log
if get_bool("HEISENWAVE_ENV_LOG", False):
    logging.getLogger("heisenwave.env").info("Active env file: %s", _env_path())

RUNTIME_SETTINGS = {
    "LOG_DIR": os.getenv("LOG_DIR", "logs"),
    "LOG_LEVEL": os.getenv("LOG_LEVEL", "INFO").upper(),
    "METRICS_ENABLED": get_bool("METRICS_ENABLED", True),
    "DEFAULT_SEED": get_int("DEFAULT_SEED", 20240601),
    "GAUSS_HERMITE_POINTS": get_int("GAUSS_HERMITE_POINTS", 64),
    "SEPARABLE_REFINE": get_int("SEPARABLE_REFINE", 4),
    "CSV_FLOAT_FORMAT": os.getenv("CSV_FLOAT_FORMAT", "%.12e"),
}
