"""Pixel-space minimization of an Objective, starting from seeded noise.

Every iteration runs the forward pass over the wanted layers, evaluates
the objective, backpropagates to the image, and applies one update.  The
candidate image stays unclamped throughout; display-range handling
happens in postprocessing.

Method constants (momentum, the moment decays, epsilon) sit in
OptimizerConfig so experiments never depend on hidden values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DivergenceError, ShapeError
from .network import Network, backward_to_image, forward_collect
from .objective import LossBreakdown, Objective, evaluate

__all__ = [
    "METHODS",
    "INIT_MODES",
    "OptimizerConfig",
    "TraceEntry",
    "LossTrace",
    "init_image",
    "minimize",
    "numerical_image_gradient",
    "write_trace_csv",
]

METHODS = ("plain-gd", "momentum-gd", "adaptive-moments")
INIT_MODES = ("white-noise", "content-image", "style-image")

# stop-rule window: the loss must move less than rel_tol relative over
# this many iterations before the run ends early
_TOL_WINDOW = 10


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "adaptive-moments"
    step_size: float = 10.0
    max_iters: int = 500
    rel_tol: float = 0.0
    seed: int = 0
    init: str = "white-noise"
    noise_sigma: float = 64.0
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(
                f"method must be one of {METHODS}, got {self.method!r}"
            )
        if self.init not in INIT_MODES:
            raise ConfigurationError(
                f"init must be one of {INIT_MODES}, got {self.init!r}"
            )
        if self.step_size <= 0:
            raise ConfigurationError(f"step_size must be > 0, got {self.step_size}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol < 0:
            raise ConfigurationError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must fit in u64, got {self.seed}")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    breakdown: LossBreakdown
    grad_max_norm: float

    @property
    def content_loss(self) -> float:
        return self.breakdown.content_loss

    @property
    def style_loss(self) -> float:
        return self.breakdown.style_loss

    @property
    def total(self) -> float:
        return self.breakdown.total


@dataclass(frozen=True)
class LossTrace:
    entries: tuple[TraceEntry, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i) -> TraceEntry:
        return self.entries[i]

    @property
    def final(self) -> TraceEntry:
        return self.entries[-1]


def init_image(
    shape,
    config: OptimizerConfig,
    content_image: np.ndarray | None = None,
    style_image: np.ndarray | None = None,
) -> np.ndarray:
    """Starting candidate: seeded Gaussian noise, or a copy of a source image."""
    shape = tuple(shape)
    if len(shape) != 3 or shape[0] != 3:
        raise ShapeError(f"candidate shape must be (3, H, W), got {shape}")
    if config.init == "white-noise":
        rng = np.random.default_rng(config.seed)
        return rng.normal(0.0, config.noise_sigma, size=shape)
    source = content_image if config.init == "content-image" else style_image
    if source is None:
        raise ConfigurationError(f"init {config.init!r} needs that image supplied")
    source = np.asarray(source)
    if source.shape != shape:
        raise ConfigurationError(
            f"init image shape {source.shape} does not match candidate shape {shape}"
        )
    return np.array(source, dtype=np.float64)


def _check_finite(breakdown: LossBreakdown, grad: np.ndarray, iteration: int, entries):
    if not np.isfinite(breakdown.total) or not np.all(np.isfinite(grad)):
        raise DivergenceError(
            f"non-finite loss or gradient at iteration {iteration}",
            iteration=iteration,
            trace=LossTrace(tuple(entries)),
        )


def minimize(
    objective: Objective,
    network: Network,
    config: OptimizerConfig,
    shape,
    content_image: np.ndarray | None = None,
    style_image: np.ndarray | None = None,
) -> tuple[np.ndarray, LossTrace]:
    """Drive a (3, H, W) candidate down the objective; return it with the trace.

    `shape` must be the resolution the objective's targets were captured
    at.  One trace entry per executed iteration, recorded before that
    iteration's update.  Stops at max_iters, or earlier when the total
    moved less than rel_tol relative over the last 10 iterations.
    """
    x = init_image(
        shape,
        config,
        content_image=content_image,
        style_image=style_image,
    ).astype(network.dtype)
    wanted = objective.wanted_layers()

    velocity = np.zeros_like(x)
    m1 = np.zeros_like(x)
    m2 = np.zeros_like(x)
    entries: list[TraceEntry] = []

    for it in range(config.max_iters):
        record = forward_collect(network, x, wanted)
        breakdown, layer_grads = evaluate(objective, record)
        grad = backward_to_image(network, record, layer_grads)
        _check_finite(breakdown, grad, it, entries)
        entries.append(
            TraceEntry(
                iteration=it,
                breakdown=breakdown,
                grad_max_norm=float(np.max(np.abs(grad))),
            )
        )

        if config.rel_tol > 0 and len(entries) > _TOL_WINDOW:
            now = entries[-1].total
            then = entries[-1 - _TOL_WINDOW].total
            if abs(then - now) < config.rel_tol * max(abs(now), 1e-300):
                break

        if config.method == "plain-gd":
            x = x - config.step_size * grad
        elif config.method == "momentum-gd":
            velocity = config.momentum * velocity - config.step_size * grad
            x = x + velocity
        else:
            t = it + 1
            m1 = config.beta1 * m1 + (1.0 - config.beta1) * grad
            m2 = config.beta2 * m2 + (1.0 - config.beta2) * grad * grad
            m1_hat = m1 / (1.0 - config.beta1**t)
            m2_hat = m2 / (1.0 - config.beta2**t)
            x = x - config.step_size * m1_hat / (np.sqrt(m2_hat) + config.eps)
        x = x.astype(network.dtype, copy=False)

    return x, LossTrace(tuple(entries))


def numerical_image_gradient(
    objective: Objective,
    network: Network,
    image: np.ndarray,
    indices,
    step: float = 1e-3,
) -> np.ndarray:
    """Central differences of the total loss at a handful of pixel indices.

    This is the whole-chain oracle; run it against a float64 network.
    """
    wanted = objective.wanted_layers()

    def total_at(x):
        rec = forward_collect(network, x, wanted)
        return evaluate(objective, rec)[0].total

    out = []
    for idx in indices:
        idx = tuple(idx)
        plus = np.array(image, dtype=np.float64)
        minus = np.array(image, dtype=np.float64)
        plus[idx] += step
        minus[idx] -= step
        out.append((total_at(plus) - total_at(minus)) / (2.0 * step))
    return np.asarray(out)


def write_trace_csv(trace: LossTrace, path) -> None:
    """One row per iteration: iter, content_loss, style_loss, total, grad_max_norm."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "content_loss", "style_loss", "total", "grad_max_norm"])
        for e in trace.entries:
            writer.writerow(
                [e.iteration, repr(e.content_loss), repr(e.style_loss), repr(e.total), repr(e.grad_max_norm)]
            )
