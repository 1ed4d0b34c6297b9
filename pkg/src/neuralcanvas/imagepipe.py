"""Image file I/O and the raster/tensor bridge.

Images live on disk as 8-bit RGB; the network consumes float tensors in
(channels, height, width) layout with a per-channel mean subtracted,
optionally in BGR order when the weights were trained that way.  The
mean and order travel inside the weight file so the two can never drift
apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigurationError, ImageIOError, ShapeError

__all__ = [
    "ImageBuffer",
    "PreprocessSpec",
    "load_image",
    "save_image",
    "preprocess",
    "postprocess",
]


@dataclass(frozen=True)
class ImageBuffer:
    """8-bit RGB raster, row-major (H, W, 3)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 3 or p.shape[2] != 3:
            raise ShapeError(
                f"pixels must be (H, W, 3), got {getattr(p, 'shape', None)}"
            )
        if p.dtype != np.uint8:
            raise ShapeError(f"pixels must be uint8, got {p.dtype}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PreprocessSpec:
    """Per-channel mean (in network channel order) and that order itself."""

    channel_mean: tuple[float, float, float]
    channel_order: str = "rgb"

    def __post_init__(self) -> None:
        if self.channel_order not in ("rgb", "bgr"):
            raise ConfigurationError(
                f"channel_order must be 'rgb' or 'bgr', got {self.channel_order!r}"
            )
        if len(self.channel_mean) != 3:
            raise ConfigurationError(
                f"channel_mean needs three values, got {len(self.channel_mean)}"
            )


def load_image(path, target_h: int | None = None, target_w: int | None = None) -> ImageBuffer:
    """Decode a PNG or JPEG file, bilinearly resized to the target dims.

    Passing None for both dims keeps the native size; matching dims skip
    the resample entirely so a reload is bit-exact.
    """
    if (target_h is None) != (target_w is None):
        raise ConfigurationError("target_h and target_w must be given together")
    if target_h is not None and (target_h <= 0 or target_w <= 0):
        raise ConfigurationError(
            f"target dims must be positive, got {target_h}x{target_w}"
        )
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            rgb.load()
    except OSError as exc:
        raise ImageIOError(f"cannot read image {path}: {exc}") from exc
    if target_h is not None and (rgb.height, rgb.width) != (target_h, target_w):
        rgb = rgb.resize((target_w, target_h), Image.Resampling.BILINEAR)
    return ImageBuffer(np.asarray(rgb, dtype=np.uint8))


def save_image(img: ImageBuffer, path) -> None:
    """Write as 8-bit RGB PNG, no alpha."""
    try:
        Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write image {path}: {exc}") from exc


def preprocess(img: ImageBuffer, spec: PreprocessSpec, dtype=np.float32) -> np.ndarray:
    """RGB raster -> mean-subtracted (3, H, W) tensor in network channel order."""
    t = img.pixels.transpose(2, 0, 1).astype(dtype)
    if spec.channel_order == "bgr":
        t = t[::-1]
    mean = np.asarray(spec.channel_mean, dtype=dtype).reshape(3, 1, 1)
    return np.ascontiguousarray(t) - mean


def postprocess(t: np.ndarray, spec: PreprocessSpec) -> ImageBuffer:
    """Inverse of preprocess: re-add mean, restore RGB order, clamp, round.

    Rounding is half-away-from-zero; clamping to [0, 255] is the only
    lossy step and only fires on out-of-gamut values.
    """
    if t.ndim != 3 or t.shape[0] != 3:
        raise ShapeError(f"expected (3, H, W) tensor, got {t.shape}")
    mean = np.asarray(spec.channel_mean, dtype=np.float64).reshape(3, 1, 1)
    v = t.astype(np.float64) + mean
    if spec.channel_order == "bgr":
        v = v[::-1]
    v = np.clip(v, 0.0, 255.0)
    # values are non-negative after the clamp, so floor(v + 0.5) rounds
    # half-away-from-zero
    pixels = np.floor(v + 0.5).astype(np.uint8).transpose(1, 2, 0)
    return ImageBuffer(np.ascontiguousarray(pixels))
