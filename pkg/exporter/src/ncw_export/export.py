"""Checkpoint-to-NCW1 conversion for the 19-layer VGG feature stack."""

from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .writer import file_checksum, serialize

# conv positions inside torchvision's vgg19().features Sequential
VGG19_FEATURE_LAYERS = (
    ("conv1_1", 0),
    ("conv1_2", 2),
    ("conv2_1", 5),
    ("conv2_2", 7),
    ("conv3_1", 10),
    ("conv3_2", 12),
    ("conv3_3", 14),
    ("conv3_4", 16),
    ("conv4_1", 19),
    ("conv4_2", 21),
    ("conv4_3", 23),
    ("conv4_4", 25),
    ("conv5_1", 28),
    ("conv5_2", 30),
    ("conv5_3", 32),
    ("conv5_4", 34),
)

# 255 times the RGB means the checkpoint was trained against
CHANNEL_MEAN = (123.675, 116.28, 103.53)
CHANNEL_ORDER = "rgb"
IMAGENET_STD = (0.229, 0.224, 0.225)


class MappingError(ValueError):
    """Checkpoint layers could not be matched to the expected conv stack."""


@dataclass(frozen=True)
class ExportManifest:
    source: str
    layer_map: Mapping[str, str]  # checkpoint prefix -> layer name
    channel_mean: tuple[float, float, float]
    channel_order: str
    checksum: int
    folded_normalization: bool

    def describe(self) -> str:
        lines = [
            f"source: {self.source}",
            f"layers: {len(self.layer_map)}",
        ]
        lines += [f"  {src} -> {dst}" for src, dst in self.layer_map.items()]
        lines += [
            f"channel_mean: {self.channel_mean}",
            f"channel_order: {self.channel_order}",
            f"normalization folded into conv1_1: {self.folded_normalization}",
            f"checksum: {self.checksum:016x}",
        ]
        return "\n".join(lines)


def _state_dict(source):
    """Tensor mapping plus a printable identifier for the manifest."""
    if isinstance(source, (str, os.PathLike)):
        import torch

        return torch.load(source, map_location="cpu"), str(source)
    if hasattr(source, "state_dict"):
        return source.state_dict(), type(source).__name__
    if isinstance(source, Mapping):
        return source, "state-dict"
    raise TypeError(
        f"source must be a checkpoint path, a module, or a state dict, got {type(source).__name__}"
    )


def _to_f32(tensor) -> np.ndarray:
    arr = tensor.detach().cpu().numpy() if hasattr(tensor, "detach") else np.asarray(tensor)
    return np.ascontiguousarray(arr, dtype="<f4")


def export_vgg19(source, out_path, fold_normalization: bool = False) -> ExportManifest:
    """Write the 16 conv layers of a VGG-19 checkpoint as an NCW1 file.

    With fold_normalization the first conv's kernels are pre-scaled so a
    consumer can feed mean-subtracted 0..255 pixels directly instead of
    the checkpoint's native unit-scaled normalized input.  Without it
    every stored value is bit-identical to the checkpoint.
    """
    state, identifier = _state_dict(source)

    missing = []
    for name, idx in VGG19_FEATURE_LAYERS:
        for suffix in ("weight", "bias"):
            if f"features.{idx}.{suffix}" not in state:
                missing.append(f"{name} (features.{idx}.{suffix})")
    if missing:
        raise MappingError(
            "checkpoint is missing expected conv layers: " + ", ".join(missing)
        )

    layers = []
    layer_map = {}
    for name, idx in VGG19_FEATURE_LAYERS:
        w = _to_f32(state[f"features.{idx}.weight"])
        b = _to_f32(state[f"features.{idx}.bias"])
        if w.ndim != 4 or w.shape[2:] != (3, 3):
            raise MappingError(f"{name}: expected 3x3 kernels, got shape {w.shape}")
        layers.append((name, w, b))
        layer_map[f"features.{idx}"] = name

    if fold_normalization:
        name, w, b = layers[0]
        scale = 1.0 / (255.0 * np.asarray(IMAGENET_STD, dtype=np.float64))
        folded = w.astype(np.float64) * scale.reshape(1, 3, 1, 1)
        layers[0] = (name, folded.astype("<f4"), b)

    data = serialize(layers, CHANNEL_MEAN, CHANNEL_ORDER)
    Path(out_path).write_bytes(data)
    return ExportManifest(
        source=identifier,
        layer_map=layer_map,
        channel_mean=CHANNEL_MEAN,
        channel_order=CHANNEL_ORDER,
        checksum=file_checksum(data),
        folded_normalization=fold_normalization,
    )
