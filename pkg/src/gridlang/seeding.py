"""Deterministic seed derivation.

All per-instance randomness flows from one global seed through this helper,
so datasets regenerate byte-identically on any platform and instances can be
produced independently (or in parallel) without sharing an RNG stream.
"""

from __future__ import annotations

import hashlib

__all__ = ["derive_seed"]


def derive_seed(base: int, *parts: object) -> int:
    """Hash a base seed with any number of context parts into a fresh seed."""
    payload = "\x1f".join([str(base), *(str(p) for p in parts)]).encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "big")
