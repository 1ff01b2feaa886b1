"""Full-frame 2D DCT pair, rectangular zig-zag scan, mid-band access."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dctn, idctn

from .errors import BandOutOfRange, LengthMismatch


def dct2(plane):
    """Orthonormal full-frame 2D DCT-II."""
    return dctn(np.asarray(plane, dtype=np.float64), type=2, norm="ortho")


def idct2(coeffs):
    """Inverse of dct2."""
    return idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho")


@lru_cache(maxsize=32)
def _zigzag_flat(width, height):
    """Flattened (row*width + col) indices in zig-zag order, cached per size."""
    order = np.empty(width * height, dtype=np.int64)
    k = 0
    for d in range(width + height - 1):
        if d % 2 == 0:
            # upward: row decreasing
            r0 = min(d, height - 1)
            r1 = max(0, d - width + 1) - 1
            rows = range(r0, r1, -1)
        else:
            r0 = max(0, d - width + 1)
            r1 = min(d, height - 1) + 1
            rows = range(r0, r1)
        for r in rows:
            order[k] = r * width + (d - r)
            k += 1
    return order


def zigzag_order(width, height):
    """Zig-zag traversal of a width x height grid as (row, col) tuples."""
    flat = _zigzag_flat(width, height)
    return [(int(i) // width, int(i) % width) for i in flat]


@dataclass(frozen=True)
class BandSpec:
    """Mid-band selection: skip the lowest `skip` zig-zag positions, take `length`."""

    skip: int
    length: int

    def __post_init__(self):
        if self.skip < 1:
            raise BandOutOfRange("skip must be >= 1 (DC never modified)")
        if self.length < 1:
            raise BandOutOfRange("length must be >= 1")

    def check_fits(self, width, height):
        if self.skip + self.length > width * height:
            raise BandOutOfRange(
                f"band [{self.skip}, {self.skip + self.length}) exceeds "
                f"{width}x{height} plane"
            )


def extract_band(coeffs, band):
    """Band coefficients in zig-zag order starting at position `band.skip`."""
    h, w = coeffs.shape
    band.check_fits(w, h)
    flat = _zigzag_flat(w, h)[band.skip : band.skip + band.length]
    return coeffs.ravel()[flat].copy()


def insert_band(coeffs, band, values):
    """Inverse of extract_band; coefficients outside the band untouched."""
    h, w = coeffs.shape
    band.check_fits(w, h)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (band.length,):
        raise LengthMismatch(f"expected {band.length} values, got {values.shape}")
    flat = _zigzag_flat(w, h)[band.skip : band.skip + band.length]
    out = coeffs.copy()
    out.ravel()[flat] = values
    return out
