"""Seed splitting: master seed -> experiment -> trial.

``derive_seed(master, *path)`` hashes a path of ints and strings into numpy's
``SeedSequence`` spawn key, so a trial's stream depends only on its position
in the experiment tree and never on scheduling order.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "derive_rng"]


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    digest = hashlib.blake2b(str(part).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(master: int, *path) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_key(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(master: int, *path) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *path))
