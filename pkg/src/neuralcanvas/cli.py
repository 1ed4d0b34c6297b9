"""Command-line front end: content reconstruction, style reconstruction, transfer.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical
divergence.  The weight file resolves from --weights, then the
NEURALCANVAS_WEIGHTS environment variable, then ./vgg19.ncw.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import (
    ConfigurationError,
    DivergenceError,
    ImageIOError,
    ShapeError,
    WeightFileError,
)
from .imagepipe import load_image, postprocess, preprocess, save_image
from .network import Network, NetworkSpec, build_network, load_weights
from .objective import Objective, capture_content, capture_style
from .optimizer import (
    INIT_MODES,
    METHODS,
    OptimizerConfig,
    minimize,
    write_trace_csv,
)

__all__ = [
    "CONTENT_PRESETS",
    "STYLE_PRESETS",
    "DEFAULT_WEIGHTS",
    "build_parser",
    "cmd_reconstruct_content",
    "cmd_reconstruct_style",
    "cmd_transfer",
    "main",
]

DEFAULT_WEIGHTS = "vgg19.ncw"
WEIGHTS_ENV = "NEURALCANVAS_WEIGHTS"

CONTENT_PRESETS = {
    "content-a": ("conv1_1",),
    "content-b": ("conv2_1",),
    "content-c": ("conv3_1",),
    "content-d": ("conv4_1",),
    "content-e": ("conv5_1",),
}

# nested ascending: each preset adds one block's first conv
STYLE_PRESETS = {
    "style-a": ("conv1_1",),
    "style-b": ("conv1_1", "conv2_1"),
    "style-c": ("conv1_1", "conv2_1", "conv3_1"),
    "style-d": ("conv1_1", "conv2_1", "conv3_1", "conv4_1"),
    "style-e": ("conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"),
}

_VALID_LAYERS = set(NetworkSpec.vgg19().layers)


def _content_layer(value: str) -> str:
    """A content preset name or a bare conv layer id."""
    if value in CONTENT_PRESETS:
        return CONTENT_PRESETS[value][0]
    if value in _VALID_LAYERS and value.startswith("conv"):
        return value
    raise argparse.ArgumentTypeError(
        f"{value!r} is not a content preset ({', '.join(CONTENT_PRESETS)}) "
        "or a conv layer name"
    )


def _style_preset(value: str) -> tuple[str, ...]:
    if value in STYLE_PRESETS:
        return STYLE_PRESETS[value]
    raise argparse.ArgumentTypeError(
        f"{value!r} is not a style preset ({', '.join(STYLE_PRESETS)})"
    )


def _positive_float(value: str) -> float:
    out = float(value)
    if out <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return out


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", default="output.png", help="output PNG path")
    p.add_argument("--weights", default=None,
                   help=f"NCW1 weight file (default: ${WEIGHTS_ENV} or {DEFAULT_WEIGHTS})")
    p.add_argument("--size", type=int, default=512,
                   help="long-edge target size in pixels")
    p.add_argument("--pooling", choices=("average", "max"), default="average")
    p.add_argument("--iters", type=int, default=500, help="iteration budget")
    p.add_argument("--step-size", type=_positive_float, default=10.0)
    p.add_argument("--method", choices=METHODS, default="adaptive-moments")
    p.add_argument("--init", choices=INIT_MODES, default="white-noise")
    p.add_argument("--rel-tol", type=float, default=0.0,
                   help="early-stop threshold on the 10-iteration loss window")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", default=None, help="write per-iteration CSV here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuralcanvas",
        description="Recombine the content of one image with the style of another.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rc = sub.add_parser("reconstruct-content",
                        help="rebuild an image from one layer's feature responses")
    rc.add_argument("image", help="input PNG or JPEG")
    rc.add_argument("--preset", type=_content_layer, default="content-a",
                    dest="layer", metavar="PRESET|LAYER",
                    help="content-a..content-e, or a conv layer name")
    _add_common_flags(rc)
    rc.set_defaults(func=cmd_reconstruct_content)

    rs = sub.add_parser("reconstruct-style",
                        help="build an image matching Gram targets from a style image")
    rs.add_argument("image", help="input PNG or JPEG")
    rs.add_argument("--preset", type=_style_preset, default="style-e",
                    dest="style_layers", metavar="PRESET",
                    help="style-a..style-e (cumulative layer sets)")
    _add_common_flags(rs)
    rs.set_defaults(func=cmd_reconstruct_style)

    tr = sub.add_parser("transfer",
                        help="combine a photo's content with an artwork's style")
    tr.add_argument("content_image")
    tr.add_argument("style_image")
    tr.add_argument("--ratio", type=_positive_float, default=1e-3,
                    help="content/style emphasis ratio (alpha/beta)")
    tr.add_argument("--content-layer", type=_content_layer, default="conv4_2",
                    metavar="PRESET|LAYER")
    tr.add_argument("--style-preset", type=_style_preset, default="style-e",
                    dest="style_layers", metavar="PRESET")
    _add_common_flags(tr)
    tr.set_defaults(func=cmd_transfer)

    return parser


def _resolve_weights(args) -> str:
    if args.weights is not None:
        return args.weights
    return os.environ.get(WEIGHTS_ENV, DEFAULT_WEIGHTS)


def _load_network(args) -> Network:
    path = _resolve_weights(args)
    try:
        ws = load_weights(path)
    except OSError as exc:
        raise OSError(f"cannot read weight file {path}: {exc}") from exc
    spec = NetworkSpec.from_weights(ws, pooling_mode=args.pooling)
    return build_network(spec, ws)


def _target_dims(h: int, w: int, long_edge: int) -> tuple[int, int]:
    if long_edge <= 0:
        raise ConfigurationError(f"--size must be positive, got {long_edge}")
    scale = long_edge / max(h, w)
    return max(1, round(h * scale)), max(1, round(w * scale))


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(
        method=args.method,
        step_size=args.step_size,
        max_iters=args.iters,
        rel_tol=args.rel_tol,
        seed=args.seed,
        init=args.init,
    )


def _finish(args, image: np.ndarray, trace, network: Network) -> int:
    save_image(postprocess(image, network.preprocess), args.output)
    if args.trace:
        write_trace_csv(trace, args.trace)
    final = trace.final
    print(
        f"done: {len(trace)} iterations, total loss {final.total:.6g} "
        f"(content {final.content_loss:.6g}, style {final.style_loss:.6g}) "
        f"-> {args.output}"
    )
    return 0


def cmd_reconstruct_content(args) -> int:
    network = _load_network(args)
    buf = load_image(args.image)
    th, tw = _target_dims(buf.height, buf.width, args.size)
    buf = load_image(args.image, th, tw)
    img = preprocess(buf, network.preprocess)
    target = capture_content(network, img, args.layer)
    objective = Objective(alpha=1.0, beta=0.0, content=target)
    result, trace = minimize(
        objective, network, _optimizer_config(args), img.shape, content_image=img
    )
    return _finish(args, result, trace, network)


def cmd_reconstruct_style(args) -> int:
    network = _load_network(args)
    buf = load_image(args.image)
    th, tw = _target_dims(buf.height, buf.width, args.size)
    buf = load_image(args.image, th, tw)
    img = preprocess(buf, network.preprocess)
    target = capture_style(network, img, args.style_layers)
    objective = Objective(alpha=0.0, beta=1.0, style=target)
    result, trace = minimize(
        objective, network, _optimizer_config(args), img.shape, style_image=img
    )
    return _finish(args, result, trace, network)


def cmd_transfer(args) -> int:
    network = _load_network(args)
    content_buf = load_image(args.content_image)
    th, tw = _target_dims(content_buf.height, content_buf.width, args.size)
    content_buf = load_image(args.content_image, th, tw)
    style_buf = load_image(args.style_image, th, tw)
    content_img = preprocess(content_buf, network.preprocess)
    style_img = preprocess(style_buf, network.preprocess)
    content = capture_content(network, content_img, args.content_layer)
    style = capture_style(network, style_img, args.style_layers)
    # --ratio fixes alpha/beta with beta = 1
    objective = Objective(alpha=args.ratio, beta=1.0, content=content, style=style)
    result, trace = minimize(
        objective,
        network,
        _optimizer_config(args),
        content_img.shape,
        content_image=content_img,
        style_image=style_img,
    )
    return _finish(args, result, trace, network)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except (ConfigurationError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImageIOError, WeightFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
