import numpy as np
import pytest

from lesionscreen import fixtures, kernels, model
from lesionscreen.imaging import Raster


@pytest.fixture(scope="session")
def reference_graph():
    return model.load_model(model.export_reference_model(seed=0))


@pytest.fixture(scope="session")
def corpus_manifest():
    return fixtures.corpus_manifest()


@pytest.fixture(scope="session")
def warm_kernels():
    """Force JIT compilation before any timed section."""
    img = np.zeros((8, 8, 3), dtype=np.float32)
    kernels.bilinear_resize(img, 4, 4)
    hsv = kernels.rgb_to_hsv_image(img)
    kernels.hsv_adjust_to_rgb(hsv, 0.0, 1.0, 1.0)
    kernels.affine_warp(img, np.eye(2, 3))
    x = np.zeros((1, 2, 6, 6), dtype=np.float32)
    kernels.conv2d(x, np.zeros((2, 2, 3, 3), np.float32), np.zeros(2, np.float32), 1, 1)
    kernels.maxpool2d(x, 2, 2)
    kernels.dense(np.zeros((1, 4), np.float32), np.zeros((3, 4), np.float32), np.zeros(3, np.float32))
    kernels.laplacian_variance(np.zeros((8, 8), np.float32))


def make_raster(seed: int, height: int, width: int) -> Raster:
    rng = np.random.default_rng(seed)
    return Raster(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))
