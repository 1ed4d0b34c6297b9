"""Convolutional feature extractor: topology, weight loading, forward/backward.

The full topology is the 19-layer VGG stack: 16 conv layers in five
blocks (widths 64, 64 | 128, 128 | 256 x4 | 512 x4 | 512 x4), a pool
after each block, and no fully connected layers.  Every conv is 3x3
pad-1 stride-1 followed by a rectifier; layer activations are always
the post-rectification responses.

Small test networks use the same machinery: any subset of valid conv
layer names loads, with pools inferred between blocks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, ShapeError, StateError, WeightFormatError
from .imagepipe import PreprocessSpec
from .kernels import (
    ConvKernels,
    avgpool_backward,
    avgpool_forward,
    conv2d_backward,
    conv2d_forward,
    maxpool_backward,
    maxpool_forward,
    relu_backward,
    relu_forward,
)
from .ncw1 import read_weight_file

__all__ = [
    "VGG19_CONV_NAMES",
    "NetworkSpec",
    "WeightSet",
    "Network",
    "ActivationRecord",
    "build_network",
    "load_weights",
    "forward_collect",
    "backward_to_image",
]

_BLOCK_CONVS = (2, 2, 4, 4, 4)
_BLOCK_WIDTHS = (64, 128, 256, 512, 512)
_CONV_NAME = re.compile(r"^conv([1-5])_([1-4])$")
_POOL_NAME = re.compile(r"^pool([1-5])$")

VGG19_CONV_NAMES = tuple(
    f"conv{b}_{i}"
    for b, n_convs in enumerate(_BLOCK_CONVS, start=1)
    for i in range(1, n_convs + 1)
)


def _conv_sort_key(name: str) -> tuple[int, int]:
    m = _CONV_NAME.match(name)
    if m is None:
        raise ConfigurationError(f"not a conv layer name: {name!r}")
    return int(m.group(1)), int(m.group(2))


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list, per-conv filter counts, and the pooling flavor."""

    layers: tuple[str, ...]
    widths: Mapping[str, int]
    pooling_mode: str = "average"

    def __post_init__(self) -> None:
        if self.pooling_mode not in ("average", "max"):
            raise ConfigurationError(
                f"pooling_mode must be 'average' or 'max', got {self.pooling_mode!r}"
            )
        convs = []
        for name in self.layers:
            if _CONV_NAME.match(name):
                convs.append(name)
            elif not _POOL_NAME.match(name):
                raise ConfigurationError(f"unknown layer name {name!r}")
        if set(convs) != set(self.widths):
            raise ConfigurationError(
                "widths must cover exactly the conv layers: "
                f"layers have {sorted(convs)}, widths have {sorted(self.widths)}"
            )

    @property
    def conv_layers(self) -> tuple[str, ...]:
        return tuple(n for n in self.layers if n.startswith("conv"))

    @classmethod
    def vgg19(cls, pooling_mode: str = "average") -> "NetworkSpec":
        layers: list[str] = []
        widths: dict[str, int] = {}
        for b, (n_convs, width) in enumerate(zip(_BLOCK_CONVS, _BLOCK_WIDTHS), start=1):
            for i in range(1, n_convs + 1):
                name = f"conv{b}_{i}"
                layers.append(name)
                widths[name] = width
            layers.append(f"pool{b}")
        return cls(tuple(layers), widths, pooling_mode)

    @classmethod
    def from_weights(cls, weights: "WeightSet", pooling_mode: str = "average") -> "NetworkSpec":
        """Infer a topology from the conv layers a weight set provides.

        The full 16-layer set maps to the canonical stack (trailing pool
        included); any other subset gets a pool inserted at each block
        boundary and no trailing pool.
        """
        names = sorted(weights.kernels, key=_conv_sort_key)
        if set(names) == set(VGG19_CONV_NAMES):
            return cls.vgg19(pooling_mode)
        layers: list[str] = []
        widths: dict[str, int] = {}
        prev_block = None
        for name in names:
            block, _ = _conv_sort_key(name)
            if prev_block is not None and block != prev_block:
                for k in range(prev_block, block):
                    layers.append(f"pool{k}")
            layers.append(name)
            widths[name] = weights.kernels[name].out_channels
            prev_block = block
        return cls(tuple(layers), widths, pooling_mode)


@dataclass(frozen=True)
class WeightSet:
    """Conv kernels keyed by layer name, plus the preprocessing the weights expect."""

    kernels: Mapping[str, ConvKernels]
    preprocess: PreprocessSpec
    source_checksum: int | None = None


def load_weights(path) -> WeightSet:
    """Load a weight file; values are bit-exact as stored, or nothing at all."""
    raw = read_weight_file(path)
    if not raw.layers:
        raise WeightFormatError("file contains no conv layers")
    kernels: dict[str, ConvKernels] = {}
    for layer in raw.layers:
        if not _CONV_NAME.match(layer.name):
            raise WeightFormatError(f"unknown layer name {layer.name!r}")
        if layer.name in kernels:
            raise WeightFormatError(f"duplicate layer name {layer.name!r}")
        if layer.weights.shape[2:] != (3, 3):
            raise WeightFormatError(
                f"layer {layer.name}: kernels must be 3x3, got "
                f"{layer.weights.shape[2]}x{layer.weights.shape[3]}"
            )
        if layer.bias.shape[0] != layer.weights.shape[0]:
            raise WeightFormatError(
                f"layer {layer.name}: {layer.bias.shape[0]} biases for "
                f"{layer.weights.shape[0]} filters"
            )
        kernels[layer.name] = ConvKernels(layer.weights, layer.bias)
    ordered = {n: kernels[n] for n in sorted(kernels, key=_conv_sort_key)}
    return WeightSet(
        kernels=MappingProxyType(ordered),
        preprocess=PreprocessSpec(raw.channel_mean, raw.channel_order),
        source_checksum=raw.checksum,
    )


@dataclass(frozen=True)
class Network:
    """Runnable feature extractor; immutable once built."""

    spec: NetworkSpec
    kernels: Mapping[str, ConvKernels]
    dtype: np.dtype
    preprocess: PreprocessSpec

    @property
    def layers(self) -> tuple[str, ...]:
        return self.spec.layers


def build_network(spec: NetworkSpec, weights: WeightSet, dtype=np.float32) -> Network:
    """Check the weight set against the topology and freeze it into a Network.

    dtype float32 is the production setting; float64 exists for
    gradient verification.
    """
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigurationError(f"dtype must be float32 or float64, got {dtype}")
    cast: dict[str, ConvKernels] = {}
    expected_in = 3
    for name in spec.conv_layers:
        if name not in weights.kernels:
            raise ConfigurationError(f"weights missing for layer {name}")
        k = weights.kernels[name]
        expected_out = spec.widths[name]
        if (k.out_channels, k.in_channels) != (expected_out, expected_in):
            raise ConfigurationError(
                f"layer {name}: expected weights "
                f"({expected_out}, {expected_in}, 3, 3), got {k.weights.shape}"
            )
        w = k.weights.astype(dtype, copy=True)
        b = k.bias.astype(dtype, copy=True)
        w.setflags(write=False)
        b.setflags(write=False)
        cast[name] = ConvKernels(w, b)
        expected_in = expected_out
    return Network(
        spec=spec,
        kernels=MappingProxyType(cast),
        dtype=dtype,
        preprocess=weights.preprocess,
    )


@dataclass
class ActivationRecord:
    """Everything a backward pass needs: the input and each computed layer's output.

    Conv entries are post-rectification.  Insertion order of
    `activations` follows network depth.
    """

    input_image: np.ndarray
    activations: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.activations[name]

    def __contains__(self, name: str) -> bool:
        return name in self.activations


def forward_collect(network: Network, image: np.ndarray, wanted) -> ActivationRecord:
    """Run the stack over a preprocessed image, far enough to cover `wanted`.

    Outputs of every computed layer are retained so a backward pass can
    follow the same path.
    """
    wanted = set(wanted)
    if not wanted:
        raise ConfigurationError("wanted layer set is empty")
    unknown = wanted.difference(network.layers)
    if unknown:
        raise ConfigurationError(f"layers not in topology: {sorted(unknown)}")
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"input must be (3, H, W), got {image.shape}")
    image = image.astype(network.dtype, copy=False)

    depth = {name: i for i, name in enumerate(network.layers)}
    stop = max(depth[name] for name in wanted)
    record = ActivationRecord(input_image=image)
    t = image
    for name in network.layers[: stop + 1]:
        if name.startswith("conv"):
            t = relu_forward(conv2d_forward(t, network.kernels[name]))
        elif network.spec.pooling_mode == "average":
            t = avgpool_forward(t)
        else:
            t = maxpool_forward(t)
        record.activations[name] = t
    return record


def backward_to_image(
    network: Network,
    record: ActivationRecord,
    layer_grads: Mapping[str, np.ndarray],
) -> np.ndarray:
    """Push per-layer activation gradients down to the input image.

    Gradients injected at several layers accumulate additively along the
    shared path, exactly as backpropagation of their summed losses would.
    """
    if not layer_grads:
        raise ConfigurationError("no layer gradients supplied")
    depth = {name: i for i, name in enumerate(network.layers)}
    for name, g in layer_grads.items():
        if name not in record:
            raise StateError(f"layer {name} was not retained by the forward pass")
        if g.shape != record[name].shape:
            raise ShapeError(
                f"gradient for {name} has shape {g.shape}, "
                f"activation has {record[name].shape}"
            )

    start = max(depth[name] for name in layer_grads)
    layers = network.layers
    g = np.zeros_like(record[layers[start]])
    for i in range(start, -1, -1):
        name = layers[i]
        if name in layer_grads:
            g = g + layer_grads[name]
        if i == 0:
            below = record.input_image
        else:
            if layers[i - 1] not in record:
                raise StateError(f"backward path layer {layers[i - 1]} not retained")
            below = record[layers[i - 1]]
        if name.startswith("conv"):
            g = relu_backward(record[name], g)
            g = conv2d_backward(below, network.kernels[name], g)
        elif network.spec.pooling_mode == "average":
            g = avgpool_backward(g, below.shape[1:])
        else:
            g = maxpool_backward(below, g)
    return g
