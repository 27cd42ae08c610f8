"""
CSV and JSON artifacts of one run.

Floats are written with a fixed format and JSON keys are sorted, so a rerun
with the same configuration and seed reproduces every file byte for byte.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from Runtime.activity_logging import get_logger, log_event
from Runtime.data_integrity import digest_artifacts
from Runtime.error_handling import ConfigurationError
from Runtime.runtime_config import RUNTIME_SETTINGS

logger = get_logger("reports")

SUMMARY_NAME = "summary.json"


def to_builtin(value: Any) -> Any:
    """JSON-safe copy: numpy scalars and arrays unwrapped, non-finite floats as strings."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    if isinstance(value, complex):
        return {"re": to_builtin(value.real), "im": to_builtin(value.imag)}
    if isinstance(value, Path):
        return value.as_posix()
    return value


@dataclass
class RunArtifacts:
    output_dir: Path
    run_id: str
    written: list[Path] = field(default_factory=list)

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"cannot create output directory {self.output_dir}: {exc}") from exc

    def _path(self, name: str) -> Path:
        path = self.output_dir / name
        if path not in self.written:
            self.written.append(path)
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name)
        frame.to_csv(path, index=False, float_format=RUNTIME_SETTINGS["CSV_FLOAT_FORMAT"], lineterminator="\n")
        log_event(logger, "artifact_written", run_id=self.run_id, name=name, rows=len(frame))
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        path = self._path(name)
        text = json.dumps(to_builtin(payload), sort_keys=True, indent=2) + "\n"
        path.write_text(text, encoding="utf-8")
        log_event(logger, "artifact_written", run_id=self.run_id, name=name)
        return path

    def write_summary(self, summary: dict) -> Path:
        """Summary with one SHA-256 per artifact written before it."""
        digests = digest_artifacts([p for p in self.written if p.name != SUMMARY_NAME])
        payload = dict(summary)
        payload["run_id"] = self.run_id
        payload["artifacts"] = digests
        return self.write_json(SUMMARY_NAME, payload)


def checks_frame(records: list[dict]) -> pd.DataFrame:
    """Flat table of check records: check_id, anchor, sup_ratio, verdict."""
    rows = [{"check_id": r.get("check_id", ""), "anchor": r.get("anchor", ""),
             "sup_ratio": r.get("sup_ratio", float("nan")), "verdict": bool(r.get("verdict", False))}
            for r in records]
    return pd.DataFrame(rows, columns=["check_id", "anchor", "sup_ratio", "verdict"])
