"""Guilloche-style security background rendering.

Interwoven parametric strands (hypotrochoid or Lissajous families) with a
rainbow color ramp over a paper-tinted base, rasterized with anti-aliased
density splatting. Rendering is a pure function of (params, size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..imaging import Image

__all__ = ["GuillocheParams", "render_genuine", "rainbow_stops", "curve_points"]

_MAX_PERIOD_TURNS = 64  # closure bound for hypotrochoid ratios


def rainbow_stops(n: int = 6, saturation: float = 0.55, value: float = 0.78,
                  hue_offset: float = 0.0) -> tuple:
    """Evenly spaced hues as an RGB color-ramp tuple."""
    stops = []
    for i in range(n):
        h = (hue_offset + i / n) % 1.0
        f = h * 6.0
        k = int(f) % 6
        t = f - int(f)
        p, q, r = value * (1 - saturation), value * (1 - saturation * t), \
            value * (1 - saturation * (1 - t))
        rgb = [(value, r, p), (q, value, p), (p, value, r),
               (p, q, value), (r, p, value), (value, p, q)][k]
        stops.append(tuple(int(255 * c) for c in rgb))
    return tuple(stops)


@dataclass(frozen=True)
class GuillocheParams:
    """Strand geometry and styling of one security-background texture."""

    family: str = "hypotrochoid"            # or "lissajous"
    ring_ratio: tuple[int, int] = (9, 4)    # outer/rolling radius ratio R:r
    pen_ratio: float = 1.9                  # pen offset d as a multiple of r
    liss_freq: tuple[int, int] = (5, 4)
    line_width: float = 2.2
    strand_count: int = 8
    strand_shift: float = 0.35              # phase offset between strands
    base_phase: float = 0.0
    amplitude: float = 0.92                 # curve extent vs half canvas
    aspect: float = 1.0                     # y amplitude relative to x
    color_stops: tuple = field(default_factory=rainbow_stops)
    background_rgb: tuple[int, int, int] = (247, 243, 235)
    seed: int = 0

    def __post_init__(self):
        if self.strand_count < 1:
            raise ValueError("strand_count must be >= 1")
        if self.family not in ("hypotrochoid", "lissajous"):
            raise ValueError(f"unknown curve family {self.family!r}")
        if self.ring_ratio[1] == 0:
            raise ValueError("rolling radius must be nonzero")
        if self.line_width <= 0:
            raise ValueError("line_width must be positive")
        if self.period_turns > _MAX_PERIOD_TURNS:
            raise ValueError("ring ratio produces an unreasonably long period")

    @property
    def period_turns(self) -> int:
        """Parameter turns until the hypotrochoid closes."""
        big, small = self.ring_ratio
        return abs(small) // math.gcd(abs(big), abs(small))


def curve_points(params: GuillocheParams, phase: float, n: int) -> np.ndarray:
    """Sample the unit-scale strand curve at n parameter values, (n, 2)."""
    t_max = 2.0 * np.pi * params.period_turns
    t = np.linspace(0.0, t_max, n)
    if params.family == "hypotrochoid":
        big, small = params.ring_ratio
        rr = (big - small) / big
        d = params.pen_ratio * small / big
        k = (big - small) / small
        x = rr * np.cos(t + phase) + d * np.cos(k * t + phase)
        y = rr * np.sin(t + phase) - d * np.sin(k * t + phase)
        scale = rr + d
    else:
        a, b = params.liss_freq
        x = np.sin(a * t + phase)
        y = np.sin(b * t + phase * 0.7 + 0.5)
        scale = 1.0
    return np.stack([x, y], axis=1) / max(scale, 1e-9)


def _disc_kernel(width: float) -> np.ndarray:
    r = width / 2.0
    m = int(np.ceil(r))
    yy, xx = np.mgrid[-m:m + 1, -m:m + 1]
    return (np.hypot(xx, yy) <= r + 0.25).astype(np.float64)


def _strand_alpha(pts_px: np.ndarray, w: int, h: int, spacing: float,
                  kernel: np.ndarray) -> np.ndarray:
    """Density splat of sample points convolved with the pen footprint,
    clipped to an alpha coverage field."""
    density = np.zeros((h, w))
    xs, ys = pts_px[:, 0], pts_px[:, 1]
    keep = (xs > -2) & (xs < w + 1) & (ys > -2) & (ys < h + 1)
    xs, ys = xs[keep], ys[keep]
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    fx, fy = xs - x0, ys - y0
    for ddx, ddy, wt in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                         (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        gx = np.clip(x0 + ddx, 0, w - 1)
        gy = np.clip(y0 + ddy, 0, h - 1)
        np.add.at(density, (gy, gx), wt * spacing)
    alpha = ndimage.convolve(density, kernel, mode="constant")
    return np.clip(alpha, 0.0, 1.0)


def _ramp_color(stops, frac: float) -> np.ndarray:
    stops = np.asarray(stops, dtype=np.float64)
    pos = frac * (len(stops) - 1)
    i = min(int(pos), len(stops) - 2) if len(stops) > 1 else 0
    f = pos - i if len(stops) > 1 else 0.0
    return stops[i] * (1 - f) + stops[min(i + 1, len(stops) - 1)] * f


def render_genuine(params: GuillocheParams, w: int, h: int,
                   dpi: float | None = 600.0) -> Image:
    """Rasterize the strand pattern over the paper base at w x h."""
    if w < 2 or h < 2:
        raise ValueError("canvas must be at least 2x2")
    rng = np.random.default_rng(params.seed)
    canvas = np.empty((h, w, 3), dtype=np.float64)
    canvas[:] = params.background_rgb
    kernel = _disc_kernel(params.line_width)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    sx = params.amplitude * (w - 1) / 2.0
    sy = params.amplitude * (h - 1) / 2.0 * params.aspect
    sy = min(sy, (h - 1) / 2.0)

    for s in range(params.strand_count):
        phase = (params.base_phase + s * params.strand_shift
                 + rng.normal(0.0, 0.02))
        coarse = curve_points(params, phase, 2048)
        px = np.empty_like(coarse)
        px[:, 0] = cx + coarse[:, 0] * sx
        px[:, 1] = cy + coarse[:, 1] * sy
        length = np.hypot(*np.diff(px, axis=0).T).sum()
        n = int(np.clip(length / 0.35, 2048, 300_000))
        pts = curve_points(params, phase, n)
        pts[:, 0] = cx + pts[:, 0] * sx
        pts[:, 1] = cy + pts[:, 1] * sy
        spacing = length / n
        alpha = _strand_alpha(pts, w, h, spacing, kernel)[:, :, None]
        color = _ramp_color(params.color_stops,
                            s / max(params.strand_count - 1, 1))
        canvas = canvas * (1.0 - alpha) + color[None, None, :] * alpha
    out = np.floor(canvas + 0.5).clip(0, 255).astype(np.uint8)
    return Image(out, dpi=dpi)
