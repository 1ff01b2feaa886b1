"""Hot sampling kernels: numba-jitted loops with a pure-numpy fallback.

Set SSMARK_DISABLE_NUMBA=1 to force the numpy path (used by the kernel
benchmark and by CI environments without a working JIT).  Both paths use
the same arithmetic, in the same order, so results are identical.
"""

import os

import numpy as np

_DISABLED = os.environ.get("SSMARK_DISABLE_NUMBA", "0") not in ("", "0")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False


def affine_sample_numpy(src, m, out_h, out_w):
    """Inverse-warp `src` through the 2x3 affine `m` (output -> source coords).

    Returns (out, mask): bilinear samples with clamp-to-edge, and a boolean
    mask of output pixels whose source coordinate fell inside the image.
    """
    h, w = src.shape
    ys, xs = np.meshgrid(
        np.arange(out_h, dtype=np.float64),
        np.arange(out_w, dtype=np.float64),
        indexing="ij",
    )
    sx = m[0] * xs + m[1] * ys + m[2]
    sy = m[3] * xs + m[4] * ys + m[5]
    mask = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    cx = np.minimum(np.maximum(sx, 0.0), w - 1.0)
    cy = np.minimum(np.maximum(sy, 0.0), h - 1.0)
    x0 = np.floor(cx).astype(np.int64)
    y0 = np.floor(cy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = cx - x0
    fy = cy - y0
    top = (1.0 - fx) * src[y0, x0] + fx * src[y0, x1]
    bot = (1.0 - fx) * src[y1, x0] + fx * src[y1, x1]
    out = (1.0 - fy) * top + fy * bot
    return out, mask


def resample_numpy(src, out_h, out_w):
    """Bilinear resample with align-corners mapping and clamp-to-edge."""
    h, w = src.shape
    sx_step = (w - 1.0) / (out_w - 1.0) if out_w > 1 else 0.0
    sy_step = (h - 1.0) / (out_h - 1.0) if out_h > 1 else 0.0
    x_off = 0.0 if out_w > 1 else (w - 1.0) / 2.0
    y_off = 0.0 if out_h > 1 else (h - 1.0) / 2.0
    m = np.array([sx_step, 0.0, x_off, 0.0, sy_step, y_off])
    out, _ = affine_sample_numpy(src, m, out_h, out_w)
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _affine_sample_jit(src, m, out_h, out_w):  # pragma: no cover - jitted
        h, w = src.shape
        out = np.empty((out_h, out_w), dtype=np.float64)
        mask = np.empty((out_h, out_w), dtype=np.bool_)
        for y in range(out_h):
            for x in range(out_w):
                sx = m[0] * x + m[1] * y + m[2]
                sy = m[3] * x + m[4] * y + m[5]
                mask[y, x] = 0.0 <= sx <= w - 1.0 and 0.0 <= sy <= h - 1.0
                cx = min(max(sx, 0.0), w - 1.0)
                cy = min(max(sy, 0.0), h - 1.0)
                x0 = int(np.floor(cx))
                y0 = int(np.floor(cy))
                x1 = min(x0 + 1, w - 1)
                y1 = min(y0 + 1, h - 1)
                fx = cx - x0
                fy = cy - y0
                top = (1.0 - fx) * src[y0, x0] + fx * src[y0, x1]
                bot = (1.0 - fx) * src[y1, x0] + fx * src[y1, x1]
                out[y, x] = (1.0 - fy) * top + fy * bot
        return out, mask

    def affine_sample_numba(src, m, out_h, out_w):
        return _affine_sample_jit(
            np.ascontiguousarray(src, dtype=np.float64),
            np.ascontiguousarray(m, dtype=np.float64),
            out_h,
            out_w,
        )

else:  # pragma: no cover
    affine_sample_numba = None


if HAS_NUMBA and not _DISABLED:
    affine_sample = affine_sample_numba
else:
    affine_sample = affine_sample_numpy


def resample(src, out_h, out_w):
    h, w = src.shape
    sx_step = (w - 1.0) / (out_w - 1.0) if out_w > 1 else 0.0
    sy_step = (h - 1.0) / (out_h - 1.0) if out_h > 1 else 0.0
    x_off = 0.0 if out_w > 1 else (w - 1.0) / 2.0
    y_off = 0.0 if out_h > 1 else (h - 1.0) / 2.0
    m = np.array([sx_step, 0.0, x_off, 0.0, sy_step, y_off])
    out, _ = affine_sample(np.asarray(src, dtype=np.float64), m, out_h, out_w)
    return out
