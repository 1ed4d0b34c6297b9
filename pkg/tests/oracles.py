"""Independent reference implementations used to check the fast paths.

Everything here is written for clarity, not speed: plain loops and central
finite differences. Tests treat these as ground truth.
"""

import numpy as np


def direct_conv2d(x, weights, bias):
    """Direct-summation 3x3 convolution, stride 1, zero padding 1."""
    c, h, w = x.shape
    out_ch = weights.shape[0]
    xpad = np.zeros((c, h + 2, w + 2), dtype=x.dtype)
    xpad[:, 1:-1, 1:-1] = x
    out = np.zeros((out_ch, h, w), dtype=x.dtype)
    for o in range(out_ch):
        for y in range(h):
            for xx in range(w):
                acc = bias[o]
                for ci in range(c):
                    for dy in range(3):
                        for dx in range(3):
                            acc += xpad[ci, y + dy, xx + dx] * weights[o, ci, dy, dx]
                out[o, y, xx] = acc
    return out


def central_difference(f, x, step=1e-5):
    """Central finite differences of scalar f at every entry of x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad


def max_relative_error(analytic, numeric, floor_rel=1e-9):
    """Max elementwise relative error with a floor tied to the gradient scale.

    The floor keeps near-zero entries from dominating: an entry only counts
    against the bound relative to max(|analytic|, |numeric|, floor), where
    floor is floor_rel times the largest numeric magnitude.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(n)), 1e-300)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor_rel * scale)
    return float(np.max(np.abs(a - n) / denom))
