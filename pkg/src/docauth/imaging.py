"""Raster image primitives: codecs, resampling, grayscale, patch alignment, quality gate.

Images are immutable 8-bit rasters (grayscale ``(h, w)`` or RGB ``(h, w, 3)``)
with optional dpi metadata. All operations are pure functions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PilImage

from .errors import DegenerateInputError

__all__ = [
    "Image",
    "PatchOffset",
    "QualityReport",
    "QualityThresholds",
    "decode_image",
    "encode_png",
    "encode_jpeg",
    "resize",
    "to_grayscale",
    "ncc_align",
    "quality_gate",
]


@dataclass(frozen=True)
class Image:
    """An 8-bit raster with 1 or 3 channels and optional dpi metadata.

    ``data`` is ``(h, w)`` for grayscale or ``(h, w, 3)`` for RGB, row major.
    The pixel buffer is frozen after construction so instances can be shared
    across threads.
    """

    data: np.ndarray
    dpi: float | None = None

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.dtype != np.uint8:
            raise ValueError(f"image data must be uint8, got {a.dtype}")
        if a.ndim == 3 and a.shape[2] == 1:
            a = a[:, :, 0]
        if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
            raise ValueError(f"image must be (h, w) or (h, w, 3), got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        view = a.view()
        view.flags.writeable = False
        object.__setattr__(self, "data", view)
        if self.dpi is not None and self.dpi <= 0:
            raise ValueError("dpi must be positive")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]


@dataclass(frozen=True)
class PatchOffset:
    """Integer displacement of probe content relative to a reference patch."""

    dx: int
    dy: int
    peak_correlation: float


@dataclass(frozen=True)
class QualityThresholds:
    min_blur_score: float = 100.0
    max_highlight_fraction: float = 0.05


@dataclass(frozen=True)
class QualityReport:
    blur_score: float
    highlight_fraction: float
    passed: bool
    thresholds: QualityThresholds = field(default=QualityThresholds())


def decode_image(buf: bytes, dpi: float | None = None) -> Image:
    """Decode a PNG or JPEG byte stream.

    dpi is read from the container metadata when present, otherwise taken
    from the ``dpi`` argument.
    """
    with PilImage.open(io.BytesIO(buf)) as pil:
        pil.load()
        meta_dpi = pil.info.get("dpi")
        if pil.mode in ("RGBA", "LA", "P", "PA"):
            pil = pil.convert("RGB")
        elif pil.mode not in ("L", "RGB"):
            pil = pil.convert("RGB" if len(pil.getbands()) > 1 else "L")
        arr = np.asarray(pil, dtype=np.uint8)
    if dpi is None and meta_dpi:
        try:
            dpi = float(meta_dpi[0]) or None
        except (TypeError, IndexError):
            dpi = None
    return Image(arr, dpi=dpi)


def _to_pil(img: Image) -> PilImage.Image:
    return PilImage.fromarray(img.data, mode="L" if img.channels == 1 else "RGB")


def encode_png(img: Image, compress_level: int = 3) -> bytes:
    out = io.BytesIO()
    kw = {"compress_level": compress_level}
    if img.dpi:
        kw["dpi"] = (img.dpi, img.dpi)
    _to_pil(img).save(out, format="PNG", **kw)
    return out.getvalue()


def encode_jpeg(img: Image, quality: int = 90) -> bytes:
    out = io.BytesIO()
    kw = {"quality": int(quality)}
    if img.dpi:
        kw["dpi"] = (int(round(img.dpi)), int(round(img.dpi)))
    _to_pil(img).save(out, format="JPEG", **kw)
    return out.getvalue()


def _round_u8(a: np.ndarray) -> np.ndarray:
    # round half up, matching the grayscale/resize contracts
    return np.floor(a + 0.5).clip(0, 255).astype(np.uint8)


def _bilinear_axis(n_in: int, n_out: int):
    """Half-pixel-center source coordinates for one axis, split into
    (lower index, upper index, upper weight)."""
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    x = np.clip(x, 0.0, n_in - 1.0)
    i0 = np.floor(x).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, x - i0


def resize(img: Image, new_w: int, new_h: int) -> Image:
    """Bilinear resample to ``new_w`` x ``new_h`` (half-pixel-center convention)."""
    if new_w < 1 or new_h < 1:
        raise ValueError("target dimensions must be >= 1")
    if new_w == img.width and new_h == img.height:
        return Image(img.data.copy(), dpi=img.dpi)
    x0, x1, fx = _bilinear_axis(img.width, new_w)
    y0, y1, fy = _bilinear_axis(img.height, new_h)
    a = img.data.astype(np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    top = a[y0][:, x0] * (1 - fx) + a[y0][:, x1] * fx
    bot = a[y1][:, x0] * (1 - fx) + a[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    if img.channels == 1:
        out = out[:, :, 0]
    dpi = img.dpi * (new_w / img.width) if img.dpi else None
    return Image(_round_u8(out), dpi=dpi)


def to_grayscale(img: Image) -> Image:
    """Luminance conversion 0.299 R + 0.587 G + 0.114 B, rounded half up."""
    if img.channels == 1:
        return img
    a = img.data.astype(np.float64)
    lum = a[:, :, 0] * 0.299 + a[:, :, 1] * 0.587 + a[:, :, 2] * 0.114
    return Image(_round_u8(lum), dpi=img.dpi)


# Candidate offsets whose overlap with the reference drops below this
# fraction of the reference area are not scored.
_MIN_OVERLAP_FRAC = 0.25


def ncc_align(reference: Image, probe: Image, radius: int = 10) -> PatchOffset:
    """Find the integer (dx, dy) displacement of probe content relative to
    the reference patch, maximizing normalized cross-correlation.

    The probe is compared at every offset within ``radius``; each candidate
    is scored by the Pearson correlation over the overlapping region. The
    returned offset satisfies ``probe[y, x] ~ reference[y - dy, x - dx]``.
    Ties go to the smallest |dx|+|dy|, then smallest dy, then dx.
    """
    if reference.channels != 1 or probe.channels != 1:
        raise ValueError("ncc_align requires grayscale images")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    ref = reference.data.astype(np.float64)
    prb = probe.data.astype(np.float64)
    if ref.std() == 0.0:
        raise DegenerateInputError("reference patch has zero variance; NCC undefined")
    rh, rw = ref.shape
    ph, pw = prb.shape
    base_y, base_x = (ph - rh) // 2, (pw - rw) // 2
    min_overlap = max(1.0, _MIN_OVERLAP_FRAC * rh * rw)

    offsets = [(dy, dx) for dy in range(-radius, radius + 1)
               for dx in range(-radius, radius + 1)]
    offsets.sort(key=lambda d: (abs(d[0]) + abs(d[1]), d[0], d[1]))
    best = None
    best_key = None
    for dy, dx in offsets:
        py0, px0 = base_y + dy, base_x + dx
        ry0, rx0 = max(0, -py0), max(0, -px0)
        py0, px0 = max(0, py0), max(0, px0)
        h = min(rh - ry0, ph - py0)
        w = min(rw - rx0, pw - px0)
        if h <= 0 or w <= 0 or h * w < min_overlap:
            continue
        a = ref[ry0:ry0 + h, rx0:rx0 + w]
        b = prb[py0:py0 + h, px0:px0 + w]
        a = a - a.mean()
        b = b - b.mean()
        denom = np.sqrt((a * a).sum() * (b * b).sum())
        if denom == 0.0:
            continue
        corr = float((a * b).sum() / denom)
        key = (abs(dx) + abs(dy), dy, dx)
        if best is None or corr > best[0] or (corr == best[0] and key < best_key):
            best = (corr, dx, dy)
            best_key = key
    if best is None:
        raise DegenerateInputError("no candidate offset with sufficient overlap")
    corr, dx, dy = best
    return PatchOffset(dx=dx, dy=dy, peak_correlation=min(1.0, max(-1.0, corr)))


def quality_gate(img: Image, thresholds: QualityThresholds | None = None) -> QualityReport:
    """Advisory acquisition-quality check: Laplacian-variance blur score and
    near-saturated highlight fraction."""
    th = thresholds or QualityThresholds()
    gray = to_grayscale(img).data.astype(np.float64)
    if gray.shape[0] >= 3 and gray.shape[1] >= 3:
        lap = (gray[:-2, 1:-1] + gray[2:, 1:-1] + gray[1:-1, :-2]
               + gray[1:-1, 2:] - 4.0 * gray[1:-1, 1:-1])
        blur = float(lap.var())
    else:
        blur = 0.0
    highlight = float((gray >= 250).mean())
    passed = blur >= th.min_blur_score and highlight <= th.max_highlight_fraction
    return QualityReport(blur_score=blur, highlight_fraction=highlight,
                         passed=passed, thresholds=th)
