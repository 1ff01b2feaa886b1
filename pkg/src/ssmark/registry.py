"""Digital image library: persistent originals, CBIR features, registration.

The store is a directory: originals under originals/<imageid>.<ext> and an
append-only tab-separated index, one record per line.  Writers take an
advisory lock file; readers never block.
"""

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import _kernels, raster
from .errors import (
    IoFailure,
    RegistrationFailed,
    StoreLocked,
    StoreUnavailable,
)
from .mark import SupplementaryInfo
from .spectral import BandSpec

SIMILARITY_TAU = 0.90
HIST_BINS = 64

INDEX_NAME = "index.tsv"
ORIGINALS_DIR = "originals"
LOCK_NAME = "store.lock"


@dataclass(frozen=True)
class FeatureVector:
    color_hist: np.ndarray  # 64 bins (4x4x4 RGB), sums to 1
    luma_mean: float
    luma_std: float
    luma_skew: float


@dataclass(frozen=True)
class LibraryRecord:
    imageid: int
    original_path: str  # relative to store root
    features: FeatureVector
    supplementary: SupplementaryInfo
    fingerprint: Optional[int]


@dataclass(frozen=True)
class QueryResult:
    imageid: int
    similarity: float

    @property
    def confident(self):
        return self.similarity >= SIMILARITY_TAU


def extract_features(img):
    """Normalized 4x4x4 color histogram plus luma moments."""
    s = img.samples
    if img.channels == 3:
        q = (s >> 6).astype(np.int64)
        bins = q[:, :, 0] * 16 + q[:, :, 1] * 4 + q[:, :, 2]
    else:
        q = (s[:, :, 0] >> 6).astype(np.int64)
        bins = q * 16 + q * 4 + q  # gray lands on the RGB-diagonal bins
    hist = np.bincount(bins.ravel(), minlength=HIST_BINS).astype(np.float64)
    hist /= hist.sum()
    luma = raster.to_luma(img)
    mean = float(np.mean(luma))
    std = float(np.std(luma))
    if std > 1e-12:
        skew = float(np.mean(((luma - mean) / std) ** 3))
    else:
        skew = 0.0
    return FeatureVector(color_hist=hist, luma_mean=mean, luma_std=std,
                         luma_skew=skew)


def similarity(a, b):
    """1 - L1/2 over normalized histograms, clamped to [0, 1]."""
    l1 = float(np.sum(np.abs(a.color_hist - b.color_hist)))
    return min(1.0, max(0.0, 1.0 - l1 / 2.0))


def _format_record(rec):
    f = rec.features
    supp = rec.supplementary
    fields = [str(rec.imageid), rec.original_path]
    fields += [repr(float(v)) for v in f.color_hist]
    fields += [repr(f.luma_mean), repr(f.luma_std), repr(f.luma_skew)]
    fields += [
        str(supp.orig_width), str(supp.orig_height),
        str(supp.band.skip), str(supp.band.length),
        str(supp.seq_len), repr(float(supp.alpha)),
        repr(float(supp.luma_mean)), repr(float(supp.luma_var)),
    ]
    if rec.fingerprint is not None:
        fields.append(str(rec.fingerprint))
    return "\t".join(fields)


def _parse_record(line):
    parts = line.rstrip("\n").split("\t")
    if len(parts) < 2 + HIST_BINS + 3 + 8:
        raise IoFailure(f"malformed index record: {line[:60]!r}")
    imageid = int(parts[0])
    relpath = parts[1]
    hist = np.array([float(v) for v in parts[2 : 2 + HIST_BINS]])
    i = 2 + HIST_BINS
    mean, std, skew = (float(parts[i]), float(parts[i + 1]), float(parts[i + 2]))
    i += 3
    supp = SupplementaryInfo(
        orig_width=int(parts[i]),
        orig_height=int(parts[i + 1]),
        band=BandSpec(skip=int(parts[i + 2]), length=int(parts[i + 3])),
        seq_len=int(parts[i + 4]),
        alpha=float(parts[i + 5]),
        luma_mean=float(parts[i + 6]),
        luma_var=float(parts[i + 7]),
    )
    i += 8
    fingerprint = int(parts[i]) if len(parts) > i and parts[i] != "" else None
    features = FeatureVector(color_hist=hist, luma_mean=mean, luma_std=std,
                             luma_skew=skew)
    return LibraryRecord(imageid=imageid, original_path=relpath,
                         features=features, supplementary=supp,
                         fingerprint=fingerprint)


class Store:
    """File-backed image library keyed by imageid."""

    def __init__(self, root, create=False):
        self.root = os.fspath(root)
        if create:
            os.makedirs(os.path.join(self.root, ORIGINALS_DIR), exist_ok=True)
            index = os.path.join(self.root, INDEX_NAME)
            if not os.path.exists(index):
                open(index, "a").close()

    def available(self):
        return os.path.isfile(os.path.join(self.root, INDEX_NAME))

    def _require(self):
        if not self.available():
            raise StoreUnavailable(f"no store at {self.root}")

    def records(self):
        self._require()
        out = []
        with open(os.path.join(self.root, INDEX_NAME), encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(_parse_record(line))
        return out

    def get(self, imageid):
        for rec in self.records():
            if rec.imageid == imageid:
                return rec
        raise KeyError(f"imageid {imageid} not in store")

    def load_original(self, record):
        return raster.load_image(os.path.join(self.root, record.original_path))

    def ingest(self, img, supplementary, fingerprint=None):
        """Persist the original plus its record; returns the new imageid."""
        self._require()
        lock_path = os.path.join(self.root, LOCK_NAME)
        try:
            lock_fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreLocked(f"store at {self.root} is locked") from None
        try:
            existing = self.records()
            imageid = max((r.imageid for r in existing), default=0) + 1
            ext = raster.preferred_extension(img)
            relpath = os.path.join(ORIGINALS_DIR, f"{imageid}{ext}")
            raster.save_image(img, os.path.join(self.root, relpath))
            rec = LibraryRecord(
                imageid=imageid,
                original_path=relpath,
                features=extract_features(img),
                supplementary=supplementary,
                fingerprint=fingerprint,
            )
            with open(os.path.join(self.root, INDEX_NAME), "a",
                      encoding="utf-8") as fh:
                fh.write(_format_record(rec) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            return imageid
        finally:
            os.close(lock_fd)
            os.unlink(lock_path)

    def query(self, probe):
        """Best record by histogram similarity; None iff the store is empty."""
        recs = self.records()
        if not recs:
            return None
        probe_feat = extract_features(probe)
        best = max(recs, key=lambda r: similarity(probe_feat, r.features))
        return QueryResult(imageid=best.imageid,
                           similarity=similarity(probe_feat, best.features))


# ---------------------------------------------------------------------------
# geometric registration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformEstimate:
    scale_x: float
    scale_y: float
    theta_deg: float
    dx: float
    dy: float
    matrix: tuple  # final 2x3 affine, original coords -> suspect coords
    ncc: float


_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def _warp(suspect, m, out_h, out_w):
    return _kernels.affine_sample(
        np.asarray(suspect, dtype=np.float64), np.asarray(m, dtype=np.float64),
        out_h, out_w,
    )


def _masked_ncc(out, mask, ref):
    n = int(mask.sum())
    if n < 0.2 * ref.size:
        return -1.0
    a = out[mask]
    b = ref[mask]
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if denom < 1e-12:
        return -1.0
    return float(np.dot(a, b)) / denom


def _warp_ncc(suspect, ref, m):
    out, mask = _warp(suspect, m, ref.shape[0], ref.shape[1])
    return _masked_ncc(out, mask, ref)


def _compose(m, r):
    """Affine composition: apply r to output coords, then m."""
    a = np.array([[m[0], m[1], m[2]], [m[3], m[4], m[5]]])
    b = np.array([[r[0], r[1], r[2]], [r[3], r[4], r[5]], [0.0, 0.0, 1.0]])
    return (a @ b).ravel()


def _rotation_about(theta_deg, cx, cy):
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([
        c, -s, cx - c * cx + s * cy,
        s, c, cy - s * cx - c * cy,
    ])


def _axis_scale(n_src, n_dst):
    # align-corners factor mapping dst coordinate -> src coordinate
    if n_dst > 1:
        return (n_src - 1.0) / (n_dst - 1.0)
    return 0.0


def _shift_peak(ref, probe, max_shift):
    """Integer (dx, dy) maximizing cross-correlation of zero-mean planes."""
    h, w = ref.shape
    a = ref - ref.mean()
    b = np.zeros_like(a)
    b[: probe.shape[0], : probe.shape[1]] = probe - probe.mean()
    fa = np.fft.rfft2(a)
    fb = np.fft.rfft2(b)
    corr = np.fft.irfft2(fa * np.conj(fb), s=a.shape)
    # mask shifts beyond the window
    yy = np.where(np.arange(h) <= h // 2, np.arange(h), np.arange(h) - h)
    xx = np.where(np.arange(w) <= w // 2, np.arange(w), np.arange(w) - w)
    valid = (np.abs(yy)[:, None] <= max_shift) & (np.abs(xx)[None, :] <= max_shift)
    corr = np.where(valid, corr, -np.inf)
    iy, ix = np.unravel_index(int(np.argmax(corr)), corr.shape)
    return int(xx[ix]), int(yy[iy])


def _reduce(plane, factor):
    h, w = plane.shape
    return _kernels.resample(plane, max(2, round(h / factor)),
                             max(2, round(w / factor)))


def _to_full_m(m_red, s_shape, s_red_shape, o_shape, o_red_shape):
    kx_o = 1.0 / (_axis_scale(o_shape[1], o_red_shape[1]) or 1.0)
    ky_o = 1.0 / (_axis_scale(o_shape[0], o_red_shape[0]) or 1.0)
    kx_s = _axis_scale(s_shape[1], s_red_shape[1]) or 1.0
    ky_s = _axis_scale(s_shape[0], s_red_shape[0]) or 1.0
    m = np.asarray(m_red, dtype=np.float64)
    return np.array([
        m[0] * kx_o * kx_s, m[1] * ky_o * kx_s, m[2] * kx_s,
        m[3] * kx_o * ky_s, m[4] * ky_o * ky_s, m[5] * ky_s,
    ])


def register_geometry(suspect, original, supp):
    """Undo scaling / rotation / translation so the detector resynchronizes.

    Returns the corrected plane (missing regions filled from the original)
    and the transform estimate.  Raises RegistrationFailed when no candidate
    aligns with normalized cross-correlation >= 0.5.
    """
    suspect = np.asarray(suspect, dtype=np.float64)
    original = np.asarray(original, dtype=np.float64)
    oh, ow = supp.orig_height, supp.orig_width
    if original.shape != (oh, ow):
        raise RegistrationFailed("original does not match supplementary dims")
    sh, sw = suspect.shape

    factor = max(1.0, min(oh, ow) / 128.0)
    o_red = _reduce(original, factor)
    s_red = _reduce(suspect, factor)

    candidates = []
    # scale hypothesis: align-corner resampling cancels any uniform/aspect scale
    m_scale_red = np.array([
        _axis_scale(s_red.shape[1], o_red.shape[1]), 0.0, 0.0,
        0.0, _axis_scale(s_red.shape[0], o_red.shape[0]), 0.0,
    ])
    candidates.append(("scale", m_scale_red))
    # crop hypothesis: suspect is a cut-out; place it by correlation peak
    if sh < oh and sw < ow:
        dx, dy = _shift_peak(o_red, s_red, max(o_red.shape) // 2)
        # unit full-res scale expressed in the two reduced coordinate frames
        sp_ox = _axis_scale(ow, o_red.shape[1]) or 1.0
        sp_oy = _axis_scale(oh, o_red.shape[0]) or 1.0
        sp_sx = _axis_scale(sw, s_red.shape[1]) or 1.0
        sp_sy = _axis_scale(sh, s_red.shape[0]) or 1.0
        m_crop_red = np.array([
            sp_ox / sp_sx, 0.0, -dx * sp_ox / sp_sx,
            0.0, sp_oy / sp_sy, -dy * sp_oy / sp_sy,
        ])
        candidates.append(("crop", m_crop_red))

    cy, cx = (o_red.shape[0] - 1) / 2.0, (o_red.shape[1] - 1) / 2.0
    best = None
    for name, m0 in candidates:
        theta, m_rot, score = _search_rotation(s_red, o_red, m0, cx, cy)
        if best is None or score > best[3]:
            best = (name, theta, m_rot, score)
    name, theta, m_red, score = best

    # affine refinement mops up shear / residual aspect / rotation error
    if score < 1.0 - 1e-12:
        m_red, score = _refine_affine(s_red, o_red, m_red, score)

    m_full = _to_full_m(m_red, suspect.shape, s_red.shape,
                        original.shape, o_red.shape)

    # integer translation polish at full resolution
    out, mask = _warp(suspect, m_full, oh, ow)
    probe = np.where(mask, out, original.mean())
    dx, dy = _shift_peak(original, probe, 16)
    if (dx, dy) != (0, 0):
        m_shift = _compose(m_full, np.array([1.0, 0.0, -float(dx),
                                             0.0, 1.0, -float(dy)]))
        if _warp_ncc(suspect, original, m_shift) > _masked_ncc(out, mask, original):
            m_full = m_shift
            out, mask = _warp(suspect, m_full, oh, ow)

    # the refiner can leave sub-pixel drift the NCC barely sees but the
    # correlator does; snap toward the exact hypothesis when that scores best
    m0_full = _to_full_m(
        dict(candidates)[name], suspect.shape, s_red.shape,
        original.shape, o_red.shape,
    )
    snaps = [np.concatenate([m_full[:2], [round(m_full[2])],
                             m_full[3:5], [round(m_full[5])]])]
    if abs(theta) < 0.05:
        snaps.append(np.array([m0_full[0], m0_full[1], round(m_full[2]),
                               m0_full[3], m0_full[4], round(m_full[5])]))
    best_score = _masked_ncc(out, mask, original)
    for cand in snaps:
        score = _warp_ncc(suspect, original, cand)
        if score > best_score:
            m_full, best_score = cand, score
            out, mask = _warp(suspect, m_full, oh, ow)

    final_ncc = _masked_ncc(out, mask, original)
    if final_ncc < 0.5:
        raise RegistrationFailed(f"peak correlation {final_ncc:.3f} < 0.5")

    if np.max(np.abs(m_full - _IDENTITY)) < 1e-9:
        result = suspect.copy()
    else:
        result = np.where(mask, out, original)

    sx = math.hypot(m_full[0], m_full[3])
    sy = math.hypot(m_full[1], m_full[4])
    est = TransformEstimate(
        scale_x=1.0 / sx if sx > 1e-12 else 1.0,
        scale_y=1.0 / sy if sy > 1e-12 else 1.0,
        theta_deg=-math.degrees(math.atan2(m_full[3], m_full[0])),
        dx=float(m_full[2]),
        dy=float(m_full[5]),
        matrix=tuple(float(v) for v in m_full),
        ncc=final_ncc,
    )
    return result, est


def _search_rotation(s_red, o_red, m0, cx, cy, lo=-30.0, hi=30.0):
    best_theta, best_m, best_score = 0.0, m0, _warp_ncc(s_red, o_red, m0)
    for theta in np.arange(lo, hi + 1e-9, 0.5):
        if abs(theta) < 1e-12:
            continue
        m = _compose(m0, _rotation_about(theta, cx, cy))
        score = _warp_ncc(s_red, o_red, m)
        if score > best_score:
            best_theta, best_m, best_score = float(theta), m, score
    coarse = best_theta
    for theta in np.arange(coarse - 0.5, coarse + 0.5 + 1e-9, 0.1):
        if abs(theta - coarse) < 1e-12:
            continue
        m = _compose(m0, _rotation_about(theta, cx, cy))
        score = _warp_ncc(s_red, o_red, m)
        if score > best_score:
            best_theta, best_m, best_score = float(theta), m, score
    return best_theta, best_m, best_score


def _refine_affine(s_red, o_red, m_init, score_init):
    def objective(m):
        return -_warp_ncc(s_red, o_red, m)

    res = minimize(
        objective, np.asarray(m_init, dtype=np.float64),
        method="Nelder-Mead",
        options={"maxiter": 400, "xatol": 1e-4, "fatol": 1e-7,
                 "initial_simplex": _simplex(m_init)},
    )
    if -res.fun > score_init:
        return res.x, float(-res.fun)
    return np.asarray(m_init, dtype=np.float64), score_init


def _simplex(m0):
    m0 = np.asarray(m0, dtype=np.float64)
    steps = np.array([0.02, 0.02, 1.5, 0.02, 0.02, 1.5])
    simplex = [m0]
    for i in range(6):
        v = m0.copy()
        v[i] += steps[i]
        simplex.append(v)
    return np.array(simplex)
