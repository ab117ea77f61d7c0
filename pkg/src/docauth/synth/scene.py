"""Cluttered acquisition scenes with exact ground truth for the segmentation
and rectification benchmarks: a rendered card perspective-placed over a busy
background, plus the true quad/mask and a jittered guide."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..imaging import Image
from ..rectify import Quad, homography_from_points, quad_mask, warp_perspective
from .guilloche import GuillocheParams, rainbow_stops, render_genuine

__all__ = ["SceneSample", "make_scene"]


@dataclass(frozen=True)
class SceneSample:
    image: Image
    true_quad: Quad
    true_mask: np.ndarray
    guide_quad: Quad
    card: Image
    homography: np.ndarray


def _clutter(rng, w: int, h: int) -> np.ndarray:
    """Busy background: smooth color field, random dark blobs, fine noise."""
    coarse = rng.uniform(20, 200, size=(6, 8, 3))
    zoom = (h / 6, w / 8, 1)
    base = ndimage.zoom(coarse, zoom, order=1)[:h, :w]
    for _ in range(10):
        x, y = rng.integers(0, w), rng.integers(0, h)
        rw, rh = rng.integers(w // 10, w // 3), rng.integers(h // 10, h // 3)
        color = rng.uniform(0, 160, 3)
        base[y:y + rh, x:x + rw] = 0.5 * base[y:y + rh, x:x + rw] + 0.5 * color
    base += rng.normal(0, 6, size=base.shape)
    return base.clip(0, 255)


def _card_image(rng, cw: int, ch: int) -> Image:
    params = GuillocheParams(
        family="hypotrochoid",
        ring_ratio=(9, 4),
        pen_ratio=float(rng.uniform(1.4, 2.2)),
        line_width=2.0,
        strand_count=7,
        base_phase=float(rng.uniform(0, 2 * np.pi)),
        color_stops=rainbow_stops(hue_offset=float(rng.uniform(0, 1))),
        seed=int(rng.integers(0, 2 ** 31)),
    )
    return render_genuine(params, cw, ch, dpi=None)


def make_scene(seed: int, size: tuple[int, int] = (400, 300),
               guide_jitter: float = 3.0) -> SceneSample:
    """Deterministic scene for one seed. The card covers at least ~30% of the
    frame; the guide quad is the true quad plus a small corner jitter."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    w, h = size
    clutter = _clutter(rng, w, h)

    cw, ch = 320, 202  # card raster, ID-1 aspect
    card = _card_image(rng, cw, ch)

    # target quad: scaled/rotated centered rect with mild perspective jitter
    scale = rng.uniform(0.62, 0.8) * min(w / cw, h / ch)
    ang = np.deg2rad(rng.uniform(-12, 12))
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    half = 0.5 * scale * np.array([cw - 1, ch - 1])
    base = np.array([[-half[0], -half[1]], [half[0], -half[1]],
                     [half[0], half[1]], [-half[0], half[1]]])
    corners = base @ R.T
    corners += rng.uniform(-0.04, 0.04, size=(4, 2)) * [cw * scale, ch * scale]
    span = corners.max(axis=0) - corners.min(axis=0)
    cx = rng.uniform(span[0] / 2 + 8, w - span[0] / 2 - 8)
    cy = rng.uniform(span[1] / 2 + 8, h - span[1] / 2 - 8)
    corners += [cx, cy] - corners.mean(axis=0)
    true_quad = Quad.from_points(corners)

    src = np.array([[0, 0], [cw - 1, 0], [cw - 1, ch - 1], [0, ch - 1]],
                   dtype=np.float64)
    H = homography_from_points(src, true_quad.corners)
    warped = warp_perspective(card, H, w, h)
    mask = quad_mask(true_quad, w, h)
    scene = np.where(mask[:, :, None], warped.data.astype(np.float64), clutter)
    scene = np.floor(scene + 0.5).clip(0, 255).astype(np.uint8)

    jitter = rng.uniform(-guide_jitter, guide_jitter, size=(4, 2))
    guide = Quad.from_points(np.clip(true_quad.corners + jitter,
                                     [0, 0], [w - 1, h - 1]))
    return SceneSample(image=Image(scene), true_quad=true_quad, true_mask=mask,
                       guide_quad=guide, card=card, homography=H)
