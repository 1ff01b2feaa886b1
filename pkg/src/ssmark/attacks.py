"""Deterministic attack suite for robustness evaluation."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn
from scipy.ndimage import gaussian_filter, median_filter

from . import _kernels, raster
from .errors import InvalidSpec
from .keystream import uniform_stream
from .raster import RasterImage

# JPEG Annex-K luminance quantization table
JPEG_LUMA_QUANT = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

KINDS = (
    "jpeg", "scale", "rotate_crop", "rotate_crop_scale", "crop", "shear",
    "linear", "aspect", "rowcol", "median", "blur", "sharpen", "geom_distort",
)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: tuple

    def __str__(self):
        return f"{self.kind}:" + ",".join(_fmt(p) for p in self.params)


def _fmt(p):
    if isinstance(p, float) and p == int(p):
        return str(int(p)) if abs(p) < 1e15 else repr(p)
    return str(p)


def parse_spec(text):
    """Parse the canonical text form, e.g. jpeg:50 or scale:0.75,0.75."""
    if ":" not in text:
        raise InvalidSpec(f"missing ':' in attack spec {text!r}")
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    try:
        params = tuple(float(v) for v in rest.split(",") if v.strip() != "")
    except ValueError:
        raise InvalidSpec(f"bad parameters in {text!r}") from None
    return make_spec(kind, *params)


def make_spec(kind, *params):
    params = tuple(float(p) for p in params)
    if kind == "jpeg":
        _need(kind, params, 1)
        if not (1 <= params[0] <= 100):
            raise InvalidSpec(f"jpeg quality {params[0]} outside 1..100")
    elif kind in ("scale", "aspect"):
        _need(kind, params, 2)
        if min(params) <= 0:
            raise InvalidSpec(f"{kind} factors must be positive")
    elif kind == "rotate_crop":
        _need(kind, params, 1)
        if not (-360.0 <= params[0] <= 360.0):
            raise InvalidSpec(f"rotation {params[0]} outside +-360")
    elif kind == "rotate_crop_scale":
        _need(kind, params, 2)
        if params[1] <= 0:
            raise InvalidSpec("scale factor must be positive")
    elif kind == "crop":
        _need(kind, params, 1)
        if not (0.0 < params[0] <= 1.0):
            raise InvalidSpec(f"crop fraction {params[0]} outside (0, 1]")
    elif kind == "shear":
        _need(kind, params, 2)
    elif kind == "linear":
        _need(kind, params, 4)
    elif kind == "rowcol":
        _need(kind, params, 2)
        if params[0] < 0 or params[1] < 0:
            raise InvalidSpec("rowcol counts must be >= 0")
    elif kind == "median":
        _need(kind, params, 1)
        if params[0] not in (3.0, 5.0):
            raise InvalidSpec("median window must be 3 or 5")
    elif kind == "blur":
        _need(kind, params, 1)
        if params[0] <= 0:
            raise InvalidSpec("blur sigma must be positive")
    elif kind == "sharpen":
        _need(kind, params, 1)
    elif kind == "geom_distort":
        if len(params) == 1:
            params = (params[0], 1.0)
        _need(kind, params, 2)
        if params[0] < 0:
            raise InvalidSpec("distortion amplitude must be >= 0")
    else:
        raise InvalidSpec(f"unknown attack kind {kind!r}")
    return AttackSpec(kind=kind, params=params)


def _need(kind, params, n):
    if len(params) != n:
        raise InvalidSpec(f"{kind} expects {n} parameter(s), got {len(params)}")


def _per_channel(img, fn):
    planes = [fn(img.samples[:, :, c].astype(np.float64))
              for c in range(img.channels)]
    out = np.stack(planes, axis=2)
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def _affine_about_center(plane, m_lin, out_h=None, out_w=None):
    """Inverse-warp through the 2x2 linear map about the image center."""
    h, w = plane.shape
    out_h = h if out_h is None else out_h
    out_w = w if out_w is None else out_w
    cy, cx = (out_h - 1) / 2.0, (out_w - 1) / 2.0
    scy, scx = (h - 1) / 2.0, (w - 1) / 2.0
    a, b, c, d = m_lin
    m = np.array([
        a, b, scx - a * cx - b * cy,
        c, d, scy - c * cx - d * cy,
    ])
    out, _ = _kernels.affine_sample(plane, m, out_h, out_w)
    return out


def apply_attack(img, spec):
    """Apply `spec` to `img`; deterministic for a fixed spec."""
    kind, p = spec.kind, spec.params
    if kind == "jpeg":
        return jpeg_simulate(img, int(p[0]))
    if kind in ("scale", "aspect"):
        fx, fy = p
        nw = max(1, round(img.width * fx))
        nh = max(1, round(img.height * fy))
        return _per_channel(img, lambda pl: raster.resample(pl, nw, nh))
    if kind == "rotate_crop":
        t = math.radians(p[0])
        lin = (math.cos(t), -math.sin(t), math.sin(t), math.cos(t))
        return _per_channel(img, lambda pl: _affine_about_center(pl, lin))
    if kind == "rotate_crop_scale":
        rotated = apply_attack(img, AttackSpec("rotate_crop", (p[0],)))
        return apply_attack(rotated, AttackSpec("scale", (p[1], p[1])))
    if kind == "crop":
        f = math.sqrt(p[0])
        nw = max(1, round(img.width * f))
        nh = max(1, round(img.height * f))
        x0 = (img.width - nw) // 2
        y0 = (img.height - nh) // 2
        return RasterImage(img.samples[y0 : y0 + nh, x0 : x0 + nw].copy())
    if kind == "shear":
        lin = (1.0, p[0] / 100.0, p[1] / 100.0, 1.0)
        return _per_channel(img, lambda pl: _affine_about_center(pl, lin))
    if kind == "linear":
        # p is the forward matrix; sampling needs its inverse
        det = p[0] * p[3] - p[1] * p[2]
        if abs(det) < 1e-9:
            raise InvalidSpec("linear matrix is singular")
        inv = (p[3] / det, -p[1] / det, -p[2] / det, p[0] / det)
        return _per_channel(img, lambda pl: _affine_about_center(pl, inv))
    if kind == "rowcol":
        nrows, ncols = int(p[0]), int(p[1])
        if nrows >= img.height or ncols >= img.width:
            raise InvalidSpec("cannot remove all rows or columns")
        keep_r = _keep_indices(img.height, nrows)
        keep_c = _keep_indices(img.width, ncols)
        return RasterImage(img.samples[np.ix_(keep_r, keep_c)].copy())
    if kind == "median":
        size = int(p[0])
        return _per_channel(
            img, lambda pl: median_filter(pl, size=size, mode="reflect")
        )
    if kind == "blur":
        return _per_channel(
            img, lambda pl: gaussian_filter(pl, sigma=p[0], mode="reflect")
        )
    if kind == "sharpen":
        s = p[0]
        return _per_channel(
            img,
            lambda pl: pl + s * (pl - gaussian_filter(pl, sigma=1.0,
                                                      mode="reflect")),
        )
    if kind == "geom_distort":
        return _geom_distort(img, p[0], int(p[1]))
    raise InvalidSpec(f"unknown attack kind {kind!r}")


def _keep_indices(n, remove):
    if remove == 0:
        return np.arange(n)
    drop = {min(n - 1, round((i + 1) * n / (remove + 1))) for i in range(remove)}
    # rounding collisions: top up so exactly `remove` indices are dropped
    i = 0
    while len(drop) < remove:
        if i not in drop:
            drop.add(i)
        i += 1
    return np.array([i for i in range(n) if i not in drop])


def _geom_distort(img, amplitude, seed):
    """Smooth seeded sinusoidal displacement field, bounded by `amplitude`."""
    h, w = img.height, img.width
    u = uniform_stream(max(1, seed), 8)
    fx1, fy1, fx2, fy2 = (1.0 + u[0], 1.0 + u[1], 1.0 + u[2], 1.0 + u[3])
    p1, p2, p3, p4 = (2 * math.pi * u[4], 2 * math.pi * u[5],
                      2 * math.pi * u[6], 2 * math.pi * u[7])
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    dx = amplitude * np.sin(2 * math.pi * fx1 * ys / h + p1) \
        * np.cos(2 * math.pi * fx2 * xs / w + p2)
    dy = amplitude * np.sin(2 * math.pi * fy1 * xs / w + p3) \
        * np.cos(2 * math.pi * fy2 * ys / h + p4)

    def warp(pl):
        sx = np.clip(xs + dx, 0, w - 1.0)
        sy = np.clip(ys + dy, 0, h - 1.0)
        x0 = np.floor(sx).astype(np.int64)
        y0 = np.floor(sy).astype(np.int64)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = sx - x0
        fy = sy - y0
        top = (1 - fx) * pl[y0, x0] + fx * pl[y0, x1]
        bot = (1 - fx) * pl[y1, x0] + fx * pl[y1, x1]
        return (1 - fy) * top + fy * bot

    return _per_channel(img, warp)


def jpeg_simulate(img, quality):
    """In-memory JPEG quantization on the luma plane; chroma untouched."""
    if not (1 <= int(quality) <= 100):
        raise InvalidSpec(f"quality {quality} outside 1..100")
    quality = int(quality)
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    table = np.maximum(1.0, np.floor((JPEG_LUMA_QUANT * scale + 50.0) / 100.0))

    plane = raster.to_luma(img) - 128.0
    h, w = plane.shape
    ph = (h + 7) // 8 * 8
    pw = (w + 7) // 8 * 8
    padded = np.pad(plane, ((0, ph - h), (0, pw - w)), mode="edge")
    blocks = padded.reshape(ph // 8, 8, pw // 8, 8).transpose(0, 2, 1, 3)
    coeffs = dctn(blocks, type=2, norm="ortho", axes=(2, 3))
    quant = np.round(coeffs / table) * table
    recon = idctn(quant, type=2, norm="ortho", axes=(2, 3))
    out = recon.transpose(0, 2, 1, 3).reshape(ph, pw)[:h, :w] + 128.0
    return raster.merge_luma(img, np.clip(out, 0.0, 255.0))
