"""Checkpoint conversion to the NCW1 portable weight format."""

from .export import (
    CHANNEL_MEAN,
    CHANNEL_ORDER,
    IMAGENET_STD,
    VGG19_FEATURE_LAYERS,
    ExportManifest,
    MappingError,
    export_vgg19,
)
from .fixture import make_fixture
from .writer import fnv1a_64, serialize

__version__ = "0.1.0"

__all__ = [
    "CHANNEL_MEAN",
    "CHANNEL_ORDER",
    "IMAGENET_STD",
    "VGG19_FEATURE_LAYERS",
    "ExportManifest",
    "MappingError",
    "export_vgg19",
    "fnv1a_64",
    "make_fixture",
    "serialize",
]
