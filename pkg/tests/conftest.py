import sys
from pathlib import Path

# make the shared oracle helpers importable from any test module
sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest

from ncw_writer import fixture_layers, serialize  # noqa: E402

FIXTURE_DIR = Path(__file__).parent / "fixtures"
MINI_FIXTURE = FIXTURE_DIR / "mini_4_8_8.ncw"


@pytest.fixture(scope="session")
def mini_ncw_bytes():
    return serialize(fixture_layers())


@pytest.fixture(scope="session")
def mini_weights():
    from neuralcanvas.network import load_weights

    return load_weights(MINI_FIXTURE)


@pytest.fixture(scope="session")
def mini_net64(mini_weights):
    from neuralcanvas.network import NetworkSpec, build_network

    spec = NetworkSpec.from_weights(mini_weights)
    return build_network(spec, mini_weights, dtype=np.float64)


@pytest.fixture(scope="session")
def mini_net32(mini_weights):
    from neuralcanvas.network import NetworkSpec, build_network

    spec = NetworkSpec.from_weights(mini_weights)
    return build_network(spec, mini_weights, dtype=np.float32)


def build_positive_image(kernels, shape=(3, 32, 32), margin=10.0, seed=123):
    """Deterministic image whose first-conv responses all sit above zero.

    Feature reconstruction to a strictly-positive target has its global
    optimum clear of the rectifier boundary, so descent can actually
    reach it; hinge descent on the margin violations finds such an image
    in well under a second.
    """
    from neuralcanvas.kernels import conv2d_backward, conv2d_forward

    rng = np.random.default_rng(seed)
    x = rng.uniform(-60, 60, size=shape)
    for _ in range(3000):
        z = conv2d_forward(x, kernels)
        viol = np.maximum(margin - z, 0.0)
        if not viol.any():
            break
        x = x - 0.05 * conv2d_backward(x, kernels, -viol)
    return x


@pytest.fixture(scope="session")
def positive_content_image(mini_net32):
    return build_positive_image(mini_net32.kernels["conv1_1"])
