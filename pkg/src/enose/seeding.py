"""Deterministic seed derivation for folds, branches and trees.

Child seeds come from a cryptographic hash of the master seed plus a
context path, so parallel execution order can never change results.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts: object) -> int:
    """Derive a child seed from ``master`` and a context path.

    Stable across runs, platforms and processes; distinct paths give
    independent streams for all practical purposes.
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode("ascii"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")
