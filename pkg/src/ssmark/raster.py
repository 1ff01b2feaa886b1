"""Image representation, lossless PGM/PPM I/O, luma conversion and metrics."""

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    CorruptData,
    DimensionMismatch,
    IoFailure,
    UnsupportedFormat,
)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class RasterImage:
    """8-bit raster image; samples shaped (height, width, channels) uint8."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise CorruptData(f"bad sample shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise CorruptData("image dimensions must be positive")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise CorruptData("samples out of [0, 255]")
            arr = arr.astype(np.uint8)
        self.samples = arr

    @property
    def height(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    @property
    def channels(self):
        return self.samples.shape[2]

    def copy(self):
        return RasterImage(self.samples.copy())

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return (
            self.samples.shape == other.samples.shape
            and bool(np.array_equal(self.samples, other.samples))
        )


def _read_token(data, pos):
    # skip whitespace and '#' comments between header tokens
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise CorruptData("truncated header")
    return data[start:pos], pos


def load_image(path):
    """Decode a binary PGM (P5) or PPM (P6) file; PNG if Pillow is present."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise UnsupportedFormat(f"unsupported container: {path}")
    channels = 1 if magic == b"P5" else 3
    pos = 2
    try:
        wtok, pos = _read_token(data, pos)
        htok, pos = _read_token(data, pos)
        mtok, pos = _read_token(data, pos)
        width, height, maxval = int(wtok), int(htok), int(mtok)
    except (ValueError, CorruptData) as exc:
        raise CorruptData(f"bad header in {path}: {exc}") from None
    if maxval != 255:
        raise UnsupportedFormat(f"maxval {maxval} not supported (need 255)")
    if width < 1 or height < 1:
        raise CorruptData("non-positive dimensions")
    pos += 1  # exactly one whitespace byte after maxval
    need = width * height * channels
    payload = data[pos : pos + need]
    if len(payload) != need:
        raise CorruptData(f"expected {need} sample bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return RasterImage(arr.copy())


def _load_png(path):
    try:
        from PIL import Image
    except ImportError:
        raise UnsupportedFormat("PNG support requires Pillow") from None
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    return RasterImage(arr)


def save_image(img, path):
    """Write `img` losslessly; container chosen by extension (.pgm/.ppm/.png)."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    try:
        if ext == ".png":
            _save_png(img, path)
            return
        if ext not in (".pgm", ".ppm", ""):
            raise UnsupportedFormat(f"cannot encode {ext}")
        if img.channels == 1 and ext == ".ppm":
            raise UnsupportedFormat("gray image cannot be written as PPM")
        if img.channels == 3 and ext == ".pgm":
            raise UnsupportedFormat("RGB image cannot be written as PGM")
        magic = b"P5" if img.channels == 1 else b"P6"
        header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(img.samples.tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _save_png(img, path):
    try:
        from PIL import Image
    except ImportError:
        raise UnsupportedFormat("PNG support requires Pillow") from None
    arr = img.samples[:, :, 0] if img.channels == 1 else img.samples
    try:
        Image.fromarray(arr).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def preferred_extension(img):
    return ".pgm" if img.channels == 1 else ".ppm"


def to_luma(img):
    """Luma plane as float64; gray copies samples, RGB uses 0.299/0.587/0.114."""
    s = img.samples.astype(np.float64)
    if img.channels == 1:
        return s[:, :, 0].copy()
    r, g, b = LUMA_WEIGHTS
    return r * s[:, :, 0] + g * s[:, :, 1] + b * s[:, :, 2]


def merge_luma(img, plane):
    """Replace the luma of `img` by `plane`, clamping to 8 bits.

    RGB channels are rescaled proportionally to the per-pixel luma ratio.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape != (img.height, img.width):
        raise DimensionMismatch(
            f"plane {plane.shape} vs image {(img.height, img.width)}"
        )
    if img.channels == 1:
        out = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
        return RasterImage(out[:, :, np.newaxis])
    old = to_luma(img)
    ratio = plane / np.maximum(old, 1e-6)
    scaled = img.samples.astype(np.float64) * ratio[:, :, np.newaxis]
    out = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    return RasterImage(out)


def plane_to_image(plane):
    """Round a luma plane into a gray RasterImage."""
    out = np.clip(np.rint(np.asarray(plane, dtype=np.float64)), 0, 255)
    return RasterImage(out.astype(np.uint8)[:, :, np.newaxis])


def psnr(a, b):
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if a.samples.shape != b.samples.shape:
        raise DimensionMismatch(
            f"{a.samples.shape} vs {b.samples.shape}"
        )
    diff = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def resample(plane, new_w, new_h):
    """Bilinear resample of a luma plane; edge pixels clamp-sampled."""
    if new_w < 1 or new_h < 1:
        raise DimensionMismatch("target dimensions must be positive")
    return _kernels.resample(np.asarray(plane, dtype=np.float64), new_h, new_w)
