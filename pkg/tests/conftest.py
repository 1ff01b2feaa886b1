"""Shared fixtures: deterministic synthetic images and corpus access."""

import os

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from ssmark.raster import RasterImage

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "..", "corpus")


def textured_plane(seed, h, w):
    """Layered field with hard edges so the mid band has real energy."""
    rng = np.random.default_rng(seed)
    f = gaussian_filter(rng.standard_normal((h, w)), max(2, h / 12),
                        mode="reflect")
    f += 0.4 * gaussian_filter(rng.standard_normal((h, w)), 3, mode="reflect")
    mask = gaussian_filter(rng.standard_normal((h, w)), max(2, h / 10),
                           mode="reflect")
    f += 0.6 * (mask > 0.2 * mask.std()) + 0.4 * (mask > 0.8 * mask.std())
    f -= f.min()
    f /= max(f.max(), 1e-12)
    return 20.0 + 215.0 * f


def gray_image(seed, h=128, w=128):
    return RasterImage(np.clip(np.rint(textured_plane(seed, h, w)), 0, 255)
                       .astype(np.uint8)[:, :, np.newaxis])


def color_image(seed, h=128, w=128):
    base = textured_plane(seed, h, w) / 255.0
    rng = np.random.default_rng(seed + 31)
    chans = [np.clip(base * (0.7 + 0.3 * rng.random()), 0, 1) * 255.0
             for _ in range(3)]
    return RasterImage(np.clip(np.rint(np.stack(chans, axis=2)), 0, 255)
                       .astype(np.uint8))


@pytest.fixture(scope="session")
def corpus_dir():
    assert os.path.isdir(CORPUS_DIR), "bundled corpus missing"
    return CORPUS_DIR


@pytest.fixture()
def gray128():
    return gray_image(7)


@pytest.fixture()
def color128():
    return color_image(9)
