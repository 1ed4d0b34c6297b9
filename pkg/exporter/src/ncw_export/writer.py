"""NCW1 serialization.

Layout, little-endian throughout: magic "NCW1", u32 version, u32 layer
count, then per layer a u16-prefixed UTF-8 name, four u32 dims
(out, in, kh, kw), the f32 kernel block, a u32 bias count and the f32
biases.  After the layers come three f32 channel means and one order
byte (0 = rgb, 1 = bgr), then a u64 FNV-1a hash of every preceding
byte.  This module is written against that layout alone; the engine
that consumes these files has its own independent reader.
"""

from __future__ import annotations

import struct
from collections.abc import Iterable, Sequence

import numpy as np

MAGIC = b"NCW1"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes, value: int = _FNV_OFFSET) -> int:
    """Incremental FNV-1a: pass the previous value to continue a hash."""
    h = value
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _U64
    return h


def serialize(
    layers: Iterable[tuple[str, np.ndarray, np.ndarray]],
    channel_mean: Sequence[float],
    channel_order: str,
) -> bytes:
    """File bytes for (name, kernel, bias) triples plus preprocessing metadata."""
    if channel_order not in ("rgb", "bgr"):
        raise ValueError(f"channel order must be rgb or bgr, got {channel_order!r}")
    mean = tuple(float(v) for v in channel_mean)
    if len(mean) != 3:
        raise ValueError(f"channel mean needs 3 entries, got {len(mean)}")

    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", VERSION)
    entries = list(layers)
    body += struct.pack("<I", len(entries))
    for name, w, b in entries:
        w = np.ascontiguousarray(w, dtype="<f4")
        b = np.ascontiguousarray(b, dtype="<f4")
        if w.ndim != 4:
            raise ValueError(f"{name}: kernel must be 4-d, got shape {w.shape}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ValueError(
                f"{name}: bias count {b.shape} does not match {w.shape[0]} output channels"
            )
        encoded = name.encode("utf-8")
        body += struct.pack("<H", len(encoded))
        body += encoded
        body += struct.pack("<4I", *w.shape)
        body += w.tobytes()
        body += struct.pack("<I", b.shape[0])
        body += b.tobytes()
    body += struct.pack("<3f", *mean)
    body += struct.pack("<B", 0 if channel_order == "rgb" else 1)
    body += struct.pack("<Q", fnv1a_64(bytes(body)))
    return bytes(body)


def file_checksum(data: bytes) -> int:
    """The u64 stored in a serialized file's trailer."""
    return struct.unpack("<Q", data[-8:])[0]
