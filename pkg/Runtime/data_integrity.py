"""
DATA INTEGRITY
==============
SHA-256 digests of emitted artifacts.

FLOW:
- sha256_hex() hashes strings/bytes; file_digest() hashes a file on disk.
- The run summary lists one digest per artifact so reruns can be compared.
"""

from __future__ import annotations

import hashlib
from pathlib import Path


def sha256_hex(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def file_digest(path: str | Path, chunk_size: int = 1 << 16) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def digest_artifacts(paths: list[Path]) -> dict[str, str]:
    return {Path(p).name: file_digest(p) for p in sorted(paths, key=lambda p: Path(p).name)}
