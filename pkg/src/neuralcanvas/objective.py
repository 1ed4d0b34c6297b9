"""Losses and gradients for content/style matching.

Feature maps enter as (N, M) matrices: N filters, M spatial positions,
row-major flattening of the (C, H, W) activation.  Everything here
accumulates in float64 regardless of the network dtype; the big spatial
sums are too long to trust in float32.  Per-layer gradients are handed
back in the activation's own dtype, ready for the backward pass.

Feature matrices are post-rectification, so the positivity masks in the
gradients only zero entries that sit exactly at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, ShapeError, StateError
from .kernels import as_matrix
from .network import ActivationRecord, Network, forward_collect

__all__ = [
    "ContentTarget",
    "StyleLayerTarget",
    "StyleTarget",
    "Objective",
    "LossBreakdown",
    "content_loss",
    "content_grad",
    "gram",
    "style_layer_loss",
    "style_loss",
    "style_layer_grad",
    "normalize_layer_weights",
    "capture_content",
    "capture_style",
    "evaluate",
]


def content_loss(f: np.ndarray, p: np.ndarray) -> float:
    """Half the squared distance between candidate and target features."""
    if f.shape != p.shape:
        raise ShapeError(f"feature shapes differ: {f.shape} vs {p.shape}")
    d = f.astype(np.float64).ravel() - p.astype(np.float64).ravel()
    return 0.5 * float(np.dot(d, d))


def content_grad(f: np.ndarray, p: np.ndarray) -> np.ndarray:
    """d(content_loss)/dF: the residual, zeroed where F is not positive."""
    if f.shape != p.shape:
        raise ShapeError(f"feature shapes differ: {f.shape} vs {p.shape}")
    d = f.astype(np.float64) - p.astype(np.float64)
    return np.where(f > 0, d, 0.0)


def gram(f: np.ndarray) -> np.ndarray:
    """Filter correlation matrix G = F Fᵀ, float64, exactly symmetric.

    Unnormalized sum over spatial positions; the spatial-size scaling
    appears in style_layer_loss instead.  Each unordered entry pair is
    computed once and mirrored, so G[i, j] == G[j, i] bit-for-bit.
    """
    if f.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got shape {f.shape}")
    f64 = f.astype(np.float64)
    g = f64 @ f64.T
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def style_layer_loss(g: np.ndarray, a: np.ndarray, n: int, m: int) -> float:
    """One layer's style mismatch: sum of squared Gram residuals over 4 N² M²."""
    if g.shape != a.shape or g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeError(f"gram shapes differ or are not square: {g.shape} vs {a.shape}")
    d = g.astype(np.float64).ravel() - a.astype(np.float64).ravel()
    return float(np.dot(d, d)) / (4.0 * n * n * m * m)


def style_layer_grad(
    f: np.ndarray, g: np.ndarray, a: np.ndarray, n: int, m: int
) -> np.ndarray:
    """d(style_layer_loss)/dF, zeroed where F is not positive."""
    if f.shape != (n, m):
        raise ShapeError(f"feature matrix is {f.shape}, expected ({n}, {m})")
    if g.shape != (n, n) or a.shape != (n, n):
        raise ShapeError(f"gram matrices must be ({n}, {n}): got {g.shape}, {a.shape}")
    f64 = f.astype(np.float64)
    diff = g.astype(np.float64) - a.astype(np.float64)
    # (Fᵀ diff)ᵀ; diff is symmetric so this is diff @ F
    out = (f64.T @ diff).T / (float(n) * n * m * m)
    return np.where(f > 0, out, 0.0)


@dataclass(frozen=True)
class ContentTarget:
    """Feature matrix P captured from the content image at one layer."""

    layer: str
    features: np.ndarray  # (N, M) float64, read-only


@dataclass(frozen=True)
class StyleLayerTarget:
    """Gram target A for one layer, with its loss weight and dimensions."""

    gram: np.ndarray  # (N, N) float64, read-only
    weight: float
    n: int
    m: int

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ConfigurationError(f"layer weight must be >= 0, got {self.weight}")
        if self.gram.shape != (self.n, self.n):
            raise ShapeError(
                f"gram target is {self.gram.shape}, expected ({self.n}, {self.n})"
            )


@dataclass(frozen=True)
class StyleTarget:
    """Per-layer style targets, ordered by network depth."""

    layers: Mapping[str, StyleLayerTarget]

    def active_layers(self) -> tuple[str, ...]:
        return tuple(n for n, t in self.layers.items() if t.weight > 0)


@dataclass(frozen=True)
class Objective:
    """The weighted two-part loss over a candidate image's activations."""

    alpha: float
    beta: float
    content: ContentTarget | None = None
    style: StyleTarget | None = None

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ConfigurationError(
                f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}"
            )
        if self.alpha == 0 and self.beta == 0:
            raise ConfigurationError("alpha and beta cannot both be zero")
        if self.alpha > 0 and self.content is None:
            raise ConfigurationError("alpha > 0 needs a content target")
        if self.beta > 0 and self.style is None:
            raise ConfigurationError("beta > 0 needs a style target")

    def wanted_layers(self) -> set[str]:
        wanted = set()
        if self.alpha > 0 and self.content is not None:
            wanted.add(self.content.layer)
        if self.beta > 0 and self.style is not None:
            wanted.update(self.style.active_layers())
        return wanted


@dataclass(frozen=True)
class LossBreakdown:
    """One evaluation's numbers; total is exactly alpha*content + beta*style."""

    content_loss: float
    style_terms: Mapping[str, float]
    style_loss: float
    total: float


def normalize_layer_weights(active_layers) -> dict[str, float]:
    """Uniform weights, one over the active-layer count.  Inactive layers get none."""
    names = list(active_layers)
    if not names:
        raise ConfigurationError("active layer set is empty")
    w = 1.0 / len(names)
    return {name: w for name in names}


def _frozen64(a: np.ndarray) -> np.ndarray:
    out = a.astype(np.float64, copy=True)
    out.setflags(write=False)
    return out


def capture_content(network: Network, image: np.ndarray, layer: str) -> ContentTarget:
    """Run the content image through the network and freeze P at one layer."""
    record = forward_collect(network, image, {layer})
    return ContentTarget(layer=layer, features=_frozen64(as_matrix(record[layer])))


def capture_style(
    network: Network,
    image: np.ndarray,
    layers,
    weights: Mapping[str, float] | None = None,
) -> StyleTarget:
    """Run the style image through the network and freeze Gram targets.

    Layer weights default to uniform over the given layers.
    """
    names = set(layers)
    if weights is None:
        weights = normalize_layer_weights(names)
    record = forward_collect(network, image, names)
    depth = {name: i for i, name in enumerate(network.layers)}
    targets = {}
    for name in sorted(names, key=depth.__getitem__):
        f = as_matrix(record[name])
        targets[name] = StyleLayerTarget(
            gram=_frozen64(gram(f)),
            weight=float(weights.get(name, 0.0)),
            n=f.shape[0],
            m=f.shape[1],
        )
    return StyleTarget(layers=targets)


def style_loss(target: StyleTarget, grams: Mapping[str, np.ndarray]) -> float:
    """Weighted sum of per-layer style terms over the active layers."""
    total = 0.0
    for name, t in target.layers.items():
        if t.weight == 0:
            continue
        if name not in grams:
            raise StateError(f"no gram supplied for active style layer {name}")
        total += t.weight * style_layer_loss(grams[name], t.gram, t.n, t.m)
    return total


def evaluate(
    objective: Objective, record: ActivationRecord
) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    """Loss breakdown plus per-layer gradients ready for backward_to_image.

    Gradients at each layer are alpha*d(content)/dF + beta*w_l*d(E_l)/dF,
    cast to the activation dtype.  Style terms accumulate in the target's
    depth order.
    """
    grads: dict[str, np.ndarray] = {}
    c_loss = 0.0
    if objective.alpha > 0 and objective.content is not None:
        layer = objective.content.layer
        if layer not in record:
            raise StateError(f"content layer {layer} not in activation record")
        f = as_matrix(record[layer])
        p = objective.content.features
        c_loss = content_loss(f, p)
        grads[layer] = objective.alpha * content_grad(f, p)

    s_loss = 0.0
    terms: dict[str, float] = {}
    if objective.beta > 0 and objective.style is not None:
        for name, t in objective.style.layers.items():
            if t.weight == 0:
                continue
            if name not in record:
                raise StateError(f"style layer {name} not in activation record")
            f = as_matrix(record[name])
            if f.shape != (t.n, t.m):
                raise ShapeError(
                    f"style layer {name}: candidate features {f.shape} do not "
                    f"match the captured target ({t.n}, {t.m})"
                )
            g = gram(f)
            e = style_layer_loss(g, t.gram, t.n, t.m)
            terms[name] = e
            s_loss += t.weight * e
            sg = objective.beta * t.weight * style_layer_grad(f, g, t.gram, t.n, t.m)
            if name in grads:
                grads[name] = grads[name] + sg
            else:
                grads[name] = sg

    total = objective.alpha * c_loss + objective.beta * s_loss
    breakdown = LossBreakdown(
        content_loss=c_loss, style_terms=terms, style_loss=s_loss, total=total
    )
    shaped = {
        name: g.reshape(record[name].shape).astype(record[name].dtype)
        for name, g in grads.items()
    }
    return breakdown, shaped
