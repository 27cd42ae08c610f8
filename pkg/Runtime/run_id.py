"""
RUN ID
======
Deterministic run identifier for log correlation.
"""

# FLOW:
# - derive_run_id() hashes the canonical config dump together with the seed.
# HOW:
# - First 12 hex chars of SHA-256; no clock input so reruns share the id.

from __future__ import annotations

from Runtime.data_integrity import sha256_hex


def derive_run_id(config_json: str, seed: int) -> str:
    return sha256_hex(f"{config_json}|seed={int(seed)}")[:12]
