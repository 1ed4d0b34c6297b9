"""Image synthesis by matching CNN feature statistics.

The pieces compose in one direction: load weights into a network,
capture content and style targets from photos, then minimize the
combined objective over the pixels of a synthesis image.
"""

from .errors import (
    ConfigurationError,
    DivergenceError,
    ImageIOError,
    ShapeError,
    StateError,
    WeightChecksumError,
    WeightFileError,
    WeightFormatError,
    WeightTruncationError,
)
from .imagepipe import (
    ImageBuffer,
    PreprocessSpec,
    load_image,
    postprocess,
    preprocess,
    save_image,
)
from .kernels import ConvKernels
from .ncw1 import RawLayer, RawWeightFile, fnv1a_64, read_weight_file
from .network import (
    ActivationRecord,
    Network,
    NetworkSpec,
    WeightSet,
    backward_to_image,
    build_network,
    forward_collect,
    load_weights,
)
from .objective import (
    ContentTarget,
    LossBreakdown,
    Objective,
    StyleLayerTarget,
    StyleTarget,
    capture_content,
    capture_style,
    content_grad,
    content_loss,
    evaluate,
    gram,
    normalize_layer_weights,
    style_layer_grad,
    style_layer_loss,
    style_loss,
)
from .optimizer import (
    LossTrace,
    OptimizerConfig,
    TraceEntry,
    init_image,
    minimize,
    numerical_image_gradient,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationRecord",
    "ConfigurationError",
    "ContentTarget",
    "ConvKernels",
    "DivergenceError",
    "ImageBuffer",
    "ImageIOError",
    "LossBreakdown",
    "LossTrace",
    "Network",
    "NetworkSpec",
    "Objective",
    "OptimizerConfig",
    "PreprocessSpec",
    "RawLayer",
    "RawWeightFile",
    "ShapeError",
    "StateError",
    "StyleLayerTarget",
    "StyleTarget",
    "TraceEntry",
    "WeightChecksumError",
    "WeightFileError",
    "WeightFormatError",
    "WeightSet",
    "WeightTruncationError",
    "backward_to_image",
    "build_network",
    "capture_content",
    "capture_style",
    "content_grad",
    "content_loss",
    "evaluate",
    "fnv1a_64",
    "forward_collect",
    "gram",
    "init_image",
    "load_image",
    "load_weights",
    "minimize",
    "normalize_layer_weights",
    "numerical_image_gradient",
    "postprocess",
    "preprocess",
    "read_weight_file",
    "save_image",
    "style_layer_grad",
    "style_layer_loss",
    "style_loss",
    "write_trace_csv",
]
