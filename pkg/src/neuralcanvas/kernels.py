"""Dense numeric primitives: 3x3 convolution, rectification, 2x2 pooling.

Activations are channel-major numpy arrays of shape (channels, height,
width); the matrix view used by the loss code is a zero-copy reshape to
(channels, height * width), row-major over (height, width). float32 is the
production dtype; feeding float64 keeps the whole chain in float64, which
the gradient-check fixtures rely on.

Every forward op here has an exact reverse-mode companion. Weight
gradients are never computed: kernels are frozen, only the image moves.
All functions are pure, so they are safe to call from multiple threads.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError

# Elements per im2col band; caps transient memory for large images.
_COLS_BUDGET = 1 << 24


@dataclass(frozen=True)
class ConvKernels:
    """Filter bank of one 3x3 convolution layer.

    weights: (out_channels, in_channels, 3, 3)
    bias:    (out_channels,)
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w, b = self.weights, self.bias
        if w.ndim != 4 or w.shape[2:] != (3, 3):
            raise ShapeError(f"kernel weights must be (out, in, 3, 3), got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeError(
                f"bias shape {b.shape} does not match out_channels {w.shape[0]}"
            )

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]


def as_matrix(t: np.ndarray) -> np.ndarray:
    """View a (C, H, W) activation tensor as its (C, H*W) matrix."""
    return t.reshape(t.shape[0], -1)


def as_tensor(m: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of as_matrix."""
    return m.reshape(m.shape[0], height, width)


def _check_3d(x: np.ndarray, op: str) -> None:
    if x.ndim != 3:
        raise ShapeError(f"{op} expects a (C, H, W) array, got shape {x.shape}")


def conv2d_forward(x: np.ndarray, kernels: ConvKernels) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding 1 (spatial size preserved).

    out(o, y, x) = bias(o) + sum_{c,dy,dx} x_pad(c, y+dy, x+dx) * w(o, c, dy, dx)
    """
    _check_3d(x, "conv2d_forward")
    c, h, w = x.shape
    if c != kernels.in_channels:
        raise ShapeError(
            f"input has {c} channels but kernels expect {kernels.in_channels} "
            f"(input {x.shape}, weights {kernels.weights.shape})"
        )
    out_ch = kernels.out_channels
    wmat = kernels.weights.reshape(out_ch, c * 9).astype(x.dtype, copy=False)
    xpad = np.pad(x, ((0, 0), (1, 1), (1, 1)))

    out = np.empty((out_ch, h, w), dtype=x.dtype)
    band = max(1, _COLS_BUDGET // (c * 9 * w))
    for y0 in range(0, h, band):
        y1 = min(h, y0 + band)
        # windows: (c, rows, w, 3, 3); cols index order is (c, dy, dx)
        win = sliding_window_view(xpad[:, y0 : y1 + 2, :], (3, 3), axis=(1, 2))
        cols = win.transpose(0, 3, 4, 1, 2).reshape(c * 9, (y1 - y0) * w)
        out[:, y0:y1, :] = (wmat @ cols).reshape(out_ch, y1 - y0, w)
    out += kernels.bias.astype(x.dtype, copy=False)[:, None, None]
    return out


def conv2d_backward(
    x: np.ndarray, kernels: ConvKernels, grad_out: np.ndarray
) -> np.ndarray:
    """Gradient of a conv2d_forward output back to its input.

    The adjoint of a pad-1 stride-1 3x3 convolution is the same convolution
    with spatially flipped kernels and in/out channels swapped; bias does
    not feed back. Weight gradients are intentionally not produced.
    """
    _check_3d(x, "conv2d_backward")
    _check_3d(grad_out, "conv2d_backward")
    expected = (kernels.out_channels, x.shape[1], x.shape[2])
    if x.shape[0] != kernels.in_channels:
        raise ShapeError(
            f"input has {x.shape[0]} channels but kernels expect "
            f"{kernels.in_channels} (input {x.shape}, weights {kernels.weights.shape})"
        )
    if grad_out.shape != expected:
        raise ShapeError(
            f"grad_out shape {grad_out.shape} does not match forward output {expected}"
        )
    flipped = np.ascontiguousarray(
        kernels.weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    )
    zero_bias = np.zeros(kernels.in_channels, dtype=flipped.dtype)
    return conv2d_forward(grad_out, ConvKernels(flipped, zero_bias))


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(forward_output: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Pass gradient where the rectified output is positive, zero elsewhere.

    The gradient at exactly zero is defined as zero.
    """
    if forward_output.shape != grad_out.shape:
        raise ShapeError(
            f"forward output shape {forward_output.shape} "
            f"!= grad shape {grad_out.shape}"
        )
    return np.where(forward_output > 0, grad_out, grad_out.dtype.type(0))


def _pool_windows(x: np.ndarray, op: str):
    _check_3d(x, op)
    c, h, w = x.shape
    if h < 2 or w < 2:
        raise ShapeError(f"{op} needs at least 2x2 input, got {x.shape}")
    h2, w2 = h // 2, w // 2
    # Odd trailing row/column is truncated; windows never cross the boundary.
    t = x[:, : 2 * h2, : 2 * w2].reshape(c, h2, 2, w2, 2)
    return t, h2, w2


def avgpool_forward(x: np.ndarray) -> np.ndarray:
    """2x2 mean pooling, stride 2."""
    t, _, _ = _pool_windows(x, "avgpool_forward")
    # Pairwise sum keeps constant inputs bit-exact.
    s = (t[:, :, 0, :, 0] + t[:, :, 0, :, 1]) + (t[:, :, 1, :, 0] + t[:, :, 1, :, 1])
    return s * x.dtype.type(0.25)


def avgpool_backward(grad_out: np.ndarray, input_hw: tuple[int, int]) -> np.ndarray:
    """Distribute each output gradient equally (1/4) over its 2x2 window."""
    _check_3d(grad_out, "avgpool_backward")
    c, h2, w2 = grad_out.shape
    h, w = input_hw
    if (h // 2, w // 2) != (h2, w2):
        raise ShapeError(
            f"grad shape {grad_out.shape} does not match pooling of a "
            f"{(c, h, w)} input"
        )
    g = grad_out * grad_out.dtype.type(0.25)
    up = np.repeat(np.repeat(g, 2, axis=1), 2, axis=2)
    if up.shape[1] == h and up.shape[2] == w:
        return up
    full = np.zeros((c, h, w), dtype=grad_out.dtype)
    full[:, : 2 * h2, : 2 * w2] = up
    return full


def maxpool_forward(x: np.ndarray) -> np.ndarray:
    """2x2 max pooling, stride 2."""
    t, _, _ = _pool_windows(x, "maxpool_forward")
    return np.maximum(
        np.maximum(t[:, :, 0, :, 0], t[:, :, 0, :, 1]),
        np.maximum(t[:, :, 1, :, 0], t[:, :, 1, :, 1]),
    )


def maxpool_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Route each output gradient to its window's argmax cell.

    Ties go to the first cell in row-major window order.
    """
    t, h2, w2 = _pool_windows(x, "maxpool_backward")
    c = x.shape[0]
    if grad_out.shape != (c, h2, w2):
        raise ShapeError(
            f"grad shape {grad_out.shape} does not match pooled shape {(c, h2, w2)}"
        )
    flat = t.transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    winners = flat.argmax(axis=-1)  # first max wins on ties
    scatter = np.zeros((c, h2, w2, 4), dtype=grad_out.dtype)
    np.put_along_axis(scatter, winners[..., None], grad_out[..., None], axis=-1)
    up = (
        scatter.reshape(c, h2, w2, 2, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, 2 * h2, 2 * w2)
    )
    h, w = x.shape[1], x.shape[2]
    if up.shape[1:] == (h, w):
        return up
    full = np.zeros((c, h, w), dtype=grad_out.dtype)
    full[:, : 2 * h2, : 2 * w2] = up
    return full
