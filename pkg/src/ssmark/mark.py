"""Payload layout (16-bit, flag reversal) and multi-sequence casting."""

from dataclasses import dataclass

import numpy as np

from . import raster, spectral
from .errors import CapacityExceeded, MessageOutOfRange, RangeOverflow
from .keystream import derive_seed_vector, gaussian_sequence
from .spectral import BandSpec

MESSAGE_BITS = 14
MESSAGE_MAX = (1 << MESSAGE_BITS) - 1
NUM_SLOTS = 16

DEFAULT_ALPHA = 0.2
MAX_SEQ_LEN = 16000


@dataclass(frozen=True)
class PayloadCode:
    """16-slot bit layout: existence, flag, then m13..m0 (possibly complemented)."""

    message: int
    flag: bool
    bits: tuple
    cast_set: frozenset


def encode_payload(message):
    if not (0 <= int(message) <= MESSAGE_MAX):
        raise MessageOutOfRange(f"message {message} outside 0..{MESSAGE_MAX}")
    message = int(message)
    flag = bin(message).count("1") > MESSAGE_BITS // 2
    stored = message ^ MESSAGE_MAX if flag else message
    msg_bits = tuple(bool((stored >> (MESSAGE_BITS - 1 - j)) & 1)
                     for j in range(MESSAGE_BITS))
    bits = (True, flag) + msg_bits
    cast = {0}
    if flag:
        cast.add(1)
    cast.update(2 + j for j, b in enumerate(msg_bits) if b)
    return PayloadCode(message=message, flag=flag, bits=bits,
                       cast_set=frozenset(cast))


def decode_payload(bits):
    """Recover the message from a 16-slot presence pattern; None if unmarked."""
    bits = tuple(bool(b) for b in bits)
    if len(bits) != NUM_SLOTS:
        raise ValueError(f"expected {NUM_SLOTS} bits, got {len(bits)}")
    if not bits[0]:
        return None
    stored = 0
    for b in bits[2:]:
        stored = (stored << 1) | int(b)
    return stored ^ MESSAGE_MAX if bits[1] else stored


@dataclass(frozen=True)
class EmbedParams:
    alpha: float
    band: BandSpec
    seq_len: int

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha {self.alpha} outside (0, 1]")
        if self.band.length < self.seq_len + NUM_SLOTS - 1:
            raise CapacityExceeded(
                f"band length {self.band.length} cannot host sequence "
                f"{self.seq_len} with {NUM_SLOTS - 1} start-point shifts"
            )


def default_band(width, height):
    """Mid-band placement derived from image size (recorded as supplementary)."""
    total = width * height
    skip = max(1000, total // 50)
    length = min(MAX_SEQ_LEN, total // 4)
    if skip + length > total or length < NUM_SLOTS:
        raise CapacityExceeded(f"image {width}x{height} too small for a band")
    return BandSpec(skip=skip, length=length)


def default_params(width, height, alpha=DEFAULT_ALPHA, seq_len=None):
    band = default_band(width, height)
    if seq_len is None:
        seq_len = min(MAX_SEQ_LEN, band.length - (NUM_SLOTS - 1))
    if seq_len < 1:
        raise CapacityExceeded(f"image {width}x{height} too small")
    return EmbedParams(alpha=alpha, band=band, seq_len=seq_len)


def cast_sequence(band_values, seq, offset, alpha):
    """Additive rule t' = t + alpha*|t|*x over [offset, offset+N)."""
    samples = seq.samples if hasattr(seq, "samples") else np.asarray(seq)
    n = len(samples)
    values = np.asarray(band_values, dtype=np.float64)
    if offset < 0 or offset + n > len(values):
        raise RangeOverflow(
            f"cast [{offset}, {offset + n}) exceeds band of {len(values)}"
        )
    out = values.copy()
    seg = out[offset : offset + n]
    out[offset : offset + n] = seg + alpha * np.abs(seg) * samples
    return out


@dataclass(frozen=True)
class SupplementaryInfo:
    """Pre-processing data the detector needs after registration."""

    orig_width: int
    orig_height: int
    band: BandSpec
    seq_len: int
    alpha: float
    luma_mean: float
    luma_var: float


@dataclass(frozen=True)
class EmbedReceipt:
    params: EmbedParams
    payload: PayloadCode
    supplementary: SupplementaryInfo


def embed_plane(plane, key, message, params):
    """Casting pipeline on a luma plane; returns (plane, receipt)."""
    h, w = plane.shape
    params.band.check_fits(w, h)
    payload = encode_payload(message)
    seeds = derive_seed_vector(key).seeds
    coeffs = spectral.dct2(plane)
    band = spectral.extract_band(coeffs, params.band)
    for slot in sorted(payload.cast_set):
        seq = gaussian_sequence(seeds[slot], params.seq_len)
        band = cast_sequence(band, seq, slot, params.alpha)
    coeffs = spectral.insert_band(coeffs, params.band, band)
    marked = spectral.idct2(coeffs)
    supp = SupplementaryInfo(
        orig_width=w,
        orig_height=h,
        band=params.band,
        seq_len=params.seq_len,
        alpha=params.alpha,
        luma_mean=float(np.mean(plane)),
        luma_var=float(np.var(plane)),
    )
    return marked, EmbedReceipt(params=params, payload=payload, supplementary=supp)


def embed(img, key, message, params=None):
    """Watermark `img` with (key, message); returns (image, receipt)."""
    if params is None:
        params = default_params(img.width, img.height)
    plane = raster.to_luma(img)
    marked_plane, receipt = embed_plane(plane, key, message, params)
    return raster.merge_luma(img, marked_plane), receipt
