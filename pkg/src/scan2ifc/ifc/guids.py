"""IFC GlobalId generation (22-character base-64 over 128 bits)."""
from __future__ import annotations

import hashlib
import os

_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_$"


def compress_guid(value: int) -> str:
    """Encode a 128-bit integer into the 22-character IFC base-64 form."""
    if not 0 <= value < 1 << 128:
        raise ValueError("guid value out of range")
    chars = []
    # 128 bits = 2 high bits + 21 groups of 6
    for shift in range(126, -1, -6):
        chars.append(_ALPHABET[(value >> shift) & 0x3F])
    return "".join(chars)


def deterministic_guid(seed: int, kind: str, index: int) -> str:
    """Stable GlobalId from (run seed, entity kind, ordinal); reproducible builds."""
    digest = hashlib.sha256(f"{seed}:{kind}:{index}".encode()).digest()
    return compress_guid(int.from_bytes(digest[:16], "big"))


def random_guid() -> str:
    return compress_guid(int.from_bytes(os.urandom(16), "big"))
