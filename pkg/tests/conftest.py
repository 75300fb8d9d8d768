import numpy as np
import pytest

from camforge.calibration import load_registry
from camforge.image import SRGB, ImageBuffer


@pytest.fixture(scope="session")
def registry():
    return load_registry()


def make_gradient(size: int = 64) -> ImageBuffer:
    """Horizontal ramp with per-channel offsets; exercises the full range."""
    ramp = np.linspace(0.0, 1.0, size)
    data = np.zeros((size, size, 3))
    data[:, :, 0] = ramp[None, :]
    data[:, :, 1] = ramp[:, None]
    data[:, :, 2] = 1.0 - ramp[None, :]
    return ImageBuffer(data, SRGB)


def make_photo(size: int = 64) -> ImageBuffer:
    """Smooth pseudo-photo: overlapping soft blobs, mid exposure."""
    yy, xx = np.meshgrid(np.linspace(-1, 1, size), np.linspace(-1, 1, size), indexing="ij")
    r = 0.45 + 0.25 * np.exp(-((xx - 0.3) ** 2 + (yy + 0.2) ** 2) / 0.18)
    g = 0.40 + 0.30 * np.exp(-((xx + 0.4) ** 2 + (yy - 0.1) ** 2) / 0.30)
    b = 0.35 + 0.20 * np.exp(-(xx**2 + yy**2) / 0.55)
    data = np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)
    return ImageBuffer(data, SRGB)


def make_noise(size: int = 64, seed: int = 7) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    return ImageBuffer(rng.random((size, size, 3)), SRGB)


@pytest.fixture()
def gradient_img():
    return make_gradient()


@pytest.fixture()
def photo_img():
    return make_photo()


@pytest.fixture()
def noise_img():
    return make_noise()
