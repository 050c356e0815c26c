"""Deterministic seed derivation.

All randomness in the platform flows from one root seed.  Components derive
their own sub-seed from the root plus a label path, so any of them can be
re-run in isolation and reproduce the same draws regardless of call order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root_seed: int, *labels: object) -> int:
    """64-bit sub-seed for ``labels`` under ``root_seed``."""
    h = hashlib.sha256()
    h.update(str(int(root_seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "big")


def derive_rng(root_seed: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, *labels))
