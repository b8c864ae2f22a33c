"""Deterministic seed derivation.

Every stochastic component (forest trees, evaluation folds, synthetic
users) gets its own generator whose seed is derived from a parent seed
plus a structural path, so results never depend on execution order or
thread scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def derive_seed(*parts: object) -> int:
    """Hash the parts into a stable 64-bit unsigned seed.

    Parts are stringified, so (42, "fold", "u03") and ("42", "fold", "u03")
    collide on purpose: the path is what matters, not the types.
    """
    payload = _SEP.join(str(p).encode("utf-8") for p in parts)
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(*parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
