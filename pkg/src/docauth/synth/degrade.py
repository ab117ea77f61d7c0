"""Scan-print counterfeiting simulation: resolution loss, printer blur,
ordered-dither halftone, lossy re-encode and sensor noise, in that order.

Everything is deterministic for a given (image, params) pair; the default
"paper-like" preset is an empirical difficulty calibration, not a claim about
any specific printer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..imaging import Image, decode_image, encode_jpeg, resize

__all__ = ["CounterfeitParams", "degrade", "PAPER_LIKE"]

# 4x4 clustered-dot threshold matrix (values in (0, 1))
_DITHER4 = (np.array([[12, 5, 6, 13],
                      [4, 0, 1, 7],
                      [11, 3, 2, 8],
                      [15, 10, 9, 14]], dtype=np.float64) + 0.5) / 16.0


@dataclass(frozen=True)
class CounterfeitParams:
    resample_factor: float = 0.6   # simulated rescan resolution, (0, 1]
    blur_sigma: float = 0.8        # printer dot gain, px
    halftone_cell: int = 4         # px, 0 disables
    jpeg_quality: int = 70         # 1..100
    noise_sigma: float = 2.0       # additive gray levels
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.resample_factor <= 1.0:
            raise ValueError("resample_factor must be in (0, 1]")
        if not 1 <= self.jpeg_quality <= 100:
            raise ValueError("jpeg_quality must be in [1, 100]")
        if self.blur_sigma < 0 or self.noise_sigma < 0 or self.halftone_cell < 0:
            raise ValueError("sigmas and halftone cell must be >= 0")


PAPER_LIKE = CounterfeitParams()


def _halftone(arr: np.ndarray, cell: int) -> np.ndarray:
    h, w = arr.shape[:2]
    if cell == 4:
        tm = _DITHER4
    else:
        # nearest-size Bayer-style matrix resampled from the 4x4 pattern
        reps = int(np.ceil(cell / 4))
        tm = np.kron(_DITHER4, np.ones((reps, reps)))[:cell, :cell]
    tiled = np.tile(tm, (h // cell + 1, w // cell + 1))[:h, :w]
    if arr.ndim == 3:
        tiled = tiled[:, :, None]
    return np.where(arr / 255.0 > tiled, 255.0, 0.0)


def degrade(img: Image, params: CounterfeitParams = PAPER_LIKE) -> Image:
    """Apply the counterfeit pipeline and return an image of the same size."""
    w, h = img.width, img.height
    out = img
    if params.resample_factor < 1.0:
        dw = max(1, int(round(w * params.resample_factor)))
        dh = max(1, int(round(h * params.resample_factor)))
        out = resize(resize(out, dw, dh), w, h)
    arr = out.data.astype(np.float64)
    if params.blur_sigma > 0:
        sigma = (params.blur_sigma, params.blur_sigma) + ((0,) if arr.ndim == 3 else ())
        arr = ndimage.gaussian_filter(arr, sigma=sigma, mode="nearest")
    if params.halftone_cell > 0:
        arr = _halftone(arr, params.halftone_cell)
    staged = Image(np.floor(arr + 0.5).clip(0, 255).astype(np.uint8), dpi=img.dpi)
    reencoded = decode_image(encode_jpeg(staged, quality=params.jpeg_quality))
    arr = reencoded.data.astype(np.float64)
    if params.noise_sigma > 0:
        rng = np.random.default_rng(params.seed)
        arr = arr + rng.normal(0.0, params.noise_sigma, arr.shape)
    return Image(np.floor(arr + 0.5).clip(0, 255).astype(np.uint8), dpi=img.dpi)
