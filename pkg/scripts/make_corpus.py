#!/usr/bin/env python3
"""Generate the bundled synthetic corpus (deterministic, license-clean).

Writes 6 photographic-style 512x512 images to corpus/ and 14 extra 256x256
images to corpus/extra/ for the retrieval experiments.
"""

import os
import sys

import numpy as np
from scipy.ndimage import gaussian_filter

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ssmark.raster import RasterImage, save_image  # noqa: E402


def smooth_field(rng, h, w, sigma):
    f = gaussian_filter(rng.standard_normal((h, w)), sigma, mode="reflect")
    f -= f.min()
    span = f.max() - f.min()
    return f / span if span > 1e-12 else f


def luma_scene(seed, h, w):
    """Layered scene: large forms, soft shading, edges, fine texture."""
    rng = np.random.default_rng(seed)
    base = 0.45 * smooth_field(rng, h, w, h / 10)
    base += 0.25 * smooth_field(rng, h, w, h / 40)
    base += 0.12 * smooth_field(rng, h, w, 4)
    base += 0.05 * smooth_field(rng, h, w, 1.2)
    # hard-edged regions mimic objects and give the mid band real energy
    mask = smooth_field(rng, h, w, h / 14)
    edges = np.where(mask > 0.55, 0.18, 0.0) + np.where(mask > 0.75, 0.12, 0.0)
    ys, xs = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w),
                         indexing="ij")
    grad = 0.15 * (rng.random() * xs + rng.random() * ys)
    img = base + edges + grad
    img -= img.min()
    img /= img.max()
    return 20.0 + 215.0 * img


def make_gray(seed, h=512, w=512):
    return RasterImage(np.clip(np.rint(luma_scene(seed, h, w)), 0, 255)
                       .astype(np.uint8)[:, :, np.newaxis])


def make_color(seed, h=512, w=512):
    rng = np.random.default_rng(seed + 7919)
    luma = luma_scene(seed, h, w) / 255.0
    hue = smooth_field(rng, h, w, h / 8)
    channels = []
    weights = rng.random(3) * 0.5 + 0.5
    for c in range(3):
        chroma = 0.25 * np.sin(2 * np.pi * (hue * weights[c] + c / 3.0))
        channels.append(np.clip(luma * (0.85 + chroma), 0, 1) * 255.0)
    arr = np.clip(np.rint(np.stack(channels, axis=2)), 0, 255).astype(np.uint8)
    return RasterImage(arr)


def main():
    root = os.path.join(os.path.dirname(__file__), "..", "corpus")
    os.makedirs(os.path.join(root, "extra"), exist_ok=True)
    mains = [
        ("meadow.pgm", make_gray(11)),
        ("harbor.pgm", make_gray(23)),
        ("ridge.pgm", make_gray(37)),
        ("orchard.ppm", make_color(41)),
        ("lagoon.ppm", make_color(53)),
        ("quarry.ppm", make_color(67)),
    ]
    for name, img in mains:
        save_image(img, os.path.join(root, name))
        print(f"corpus/{name}")
    for i in range(14):
        seed = 100 + 13 * i
        if i % 2 == 0:
            img = make_color(seed, 256, 256)
            name = f"extra/scene_{i:02d}.ppm"
        else:
            img = make_gray(seed, 256, 256)
            name = f"extra/scene_{i:02d}.pgm"
        save_image(img, os.path.join(root, name))
        print(f"corpus/{name}")


if __name__ == "__main__":
    main()
