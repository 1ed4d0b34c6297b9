"""Small deterministic random networks for fast engine tests.

A fixture has one conv per block (so each block transition is a pool)
and fan-in-scaled Gaussian weights.  The engine's repository commits
the generated files, which keeps its test suite independent of this
package; regenerating with the same seed must reproduce those bytes
exactly, so the recipe below is frozen.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .export import CHANNEL_MEAN, CHANNEL_ORDER
from .writer import serialize


def fixture_layers(seed: int, widths: Sequence[int]):
    rng = np.random.default_rng(seed)
    in_c = 3
    layers = []
    for block, out_c in enumerate(widths, start=1):
        fan_in = in_c * 9
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_c, in_c, 3, 3))
        b = rng.normal(0.0, 0.1, size=out_c)
        layers.append((f"conv{block}_1", w.astype("<f4"), b.astype("<f4")))
        in_c = out_c
    return layers


def make_fixture(seed: int, widths: Sequence[int], out_path) -> Path:
    """Write a fixture network; identical (seed, widths) give identical bytes."""
    widths = tuple(int(w) for w in widths)
    if not widths or any(w < 1 for w in widths):
        raise ValueError(f"widths must be positive block sizes, got {widths}")
    data = serialize(fixture_layers(seed, widths), CHANNEL_MEAN, CHANNEL_ORDER)
    path = Path(out_path)
    path.write_bytes(data)
    return path
