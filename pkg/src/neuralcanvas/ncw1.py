"""Reader for the portable "NCW1" binary weight format.

Layout, all little-endian:

    magic "NCW1" | u32 version = 1 | u32 layer_count
    per layer:
        u16 name_len | UTF-8 name
        u32 out, u32 in, u32 kh, u32 kw
        out*in*kh*kw float32 weights (row-major)
        u32 bias_len | bias_len float32 biases
    metadata: 3x float32 channel_mean | u8 channel_order (0 = rgb, 1 = bgr)
    trailer: u64 FNV-1a over every preceding byte

Values are surfaced bit-exactly as stored.  Structural parsing runs
first so a short file reports the offset where it ran out; the checksum
is verified once the structure is intact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import WeightChecksumError, WeightFormatError, WeightTruncationError

__all__ = ["MAGIC", "VERSION", "RawLayer", "RawWeightFile", "fnv1a_64", "read_weight_file"]

MAGIC = b"NCW1"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = (1 << 64) - 1


def fnv1a_64(data: bytes, value: int = _FNV_OFFSET) -> int:
    """64-bit FNV-1a.  Pass a previous return value to hash incrementally."""
    for byte in data:
        value = ((value ^ byte) * _FNV_PRIME) & _U64_MASK
    return value


@dataclass(frozen=True)
class RawLayer:
    name: str
    weights: np.ndarray  # (out, in, kh, kw) float32, bit-exact from file
    bias: np.ndarray  # (bias_len,) float32


@dataclass(frozen=True)
class RawWeightFile:
    layers: tuple[RawLayer, ...]
    channel_mean: tuple[float, float, float]
    channel_order: str  # "rgb" | "bgr"
    checksum: int


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise WeightTruncationError(f"file ends inside {what}", byte_offset=self.pos)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]


def read_weight_file(path) -> RawWeightFile:
    """Parse and validate one weight file; never returns a partial result."""
    data = Path(path).read_bytes()
    cur = _Cursor(data)

    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise WeightFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = cur.u32("version")
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}, expected {VERSION}")

    layer_count = cur.u32("layer count")
    layers = []
    for i in range(layer_count):
        name_len = cur.u16(f"name length of layer {i}")
        raw_name = cur.take(name_len, f"name of layer {i}")
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WeightFormatError(f"layer {i} name is not valid UTF-8") from exc
        out_c = cur.u32(f"dims of {name}")
        in_c = cur.u32(f"dims of {name}")
        kh = cur.u32(f"dims of {name}")
        kw = cur.u32(f"dims of {name}")
        count = out_c * in_c * kh * kw
        wbytes = cur.take(4 * count, f"weights of {name}")
        weights = np.frombuffer(wbytes, dtype="<f4").reshape(out_c, in_c, kh, kw).copy()
        bias_len = cur.u32(f"bias length of {name}")
        bbytes = cur.take(4 * bias_len, f"bias of {name}")
        bias = np.frombuffer(bbytes, dtype="<f4").copy()
        layers.append(RawLayer(name, weights, bias))

    mean = struct.unpack("<3f", cur.take(12, "channel mean"))
    order_byte = cur.take(1, "channel order")[0]
    if order_byte not in (0, 1):
        raise WeightFormatError(f"channel order byte must be 0 or 1, got {order_byte}")

    stored = cur.u64("checksum")
    if cur.pos != len(data):
        raise WeightFormatError(f"{len(data) - cur.pos} trailing bytes after checksum")
    computed = fnv1a_64(data[:-8])
    if computed != stored:
        raise WeightChecksumError(
            f"checksum mismatch: file says {stored:#018x}, content hashes to {computed:#018x}"
        )

    return RawWeightFile(
        layers=tuple(layers),
        channel_mean=mean,
        channel_order="rgb" if order_byte == 0 else "bgr",
        checksum=stored,
    )
