"""Spread-spectrum image watermarking with CBIR-assisted detection."""

from . import attacks, bench, detect, keystream, mark, raster, registry, spectral
from .mark import EmbedParams, decode_payload, default_params, encode_payload
from .raster import RasterImage, load_image, psnr, save_image
from .registry import Store

__all__ = [
    "EmbedParams",
    "RasterImage",
    "Store",
    "attacks",
    "bench",
    "decode_payload",
    "default_params",
    "detect",
    "encode_payload",
    "keystream",
    "load_image",
    "mark",
    "psnr",
    "raster",
    "registry",
    "save_image",
    "spectral",
]

__version__ = "0.1.0"
