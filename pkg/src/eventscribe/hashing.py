"""FNV-1a 64-bit hashing used for partition routing and content etags."""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes | str) -> int:
    """Hash bytes (or UTF-8 encoded text) with 64-bit FNV-1a."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK
    return h


def fnv1a64_hex(data: bytes | str) -> str:
    return format(fnv1a64(data), "016x")
