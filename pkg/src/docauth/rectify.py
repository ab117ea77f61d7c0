"""Document quadrilateral recovery and perspective rectification.

The contour of a foreground mask is decomposed into line segments; the four
segment intersections closest to the image corners define the document quad,
which an 8-DOF homography maps onto an axis-aligned output raster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateQuadError, QuadNotFoundError
from .imaging import Image, _round_u8

__all__ = [
    "Quad",
    "order_corners",
    "homography_from_points",
    "quad_to_rect_homography",
    "warp_perspective",
    "dewarp",
    "extract_quad",
    "quad_mask",
]


def order_corners(points) -> np.ndarray:
    """Canonical corner order: by angle around the centroid, starting from the
    top-left-most corner (min x+y), clockwise in image coordinates."""
    pts = np.asarray(points, dtype=np.float64).reshape(4, 2)
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    pts = pts[np.argsort(ang)]
    start = int(np.argmin(pts.sum(axis=1)))
    return np.roll(pts, -start, axis=0)


@dataclass(frozen=True)
class Quad:
    """Convex quadrilateral, corners ordered TL, TR, BR, BL."""

    corners: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.corners, dtype=np.float64).reshape(4, 2)
        object.__setattr__(self, "corners", pts)
        cross = []
        for i in range(4):
            a = pts[(i + 1) % 4] - pts[i]
            b = pts[(i + 2) % 4] - pts[(i + 1) % 4]
            cross.append(a[0] * b[1] - a[1] * b[0])
        cross = np.asarray(cross)
        # strict signs reject both reflex and collinear corners
        if not (np.all(cross > 0) or np.all(cross < 0)):
            raise ValueError("quad corners are collinear or not convex")
        if abs(self.area) <= 1e-9:
            raise ValueError("quad has zero area")

    @classmethod
    def from_points(cls, points) -> "Quad":
        return cls(order_corners(points))

    @property
    def area(self) -> float:
        x, y = self.corners[:, 0], self.corners[:, 1]
        return 0.5 * float(np.abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def scaled_about_centroid(self, factor: float) -> "Quad":
        c = self.corners.mean(axis=0)
        return Quad(c + factor * (self.corners - c))


def homography_from_points(src, dst) -> np.ndarray:
    """Direct linear transform from 4 point correspondences; the result maps
    src -> dst homogeneously and is normalized to H[2, 2] = 1."""
    src = np.asarray(src, dtype=np.float64).reshape(4, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(4, 2)
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i], b[2 * i + 1] = u, v
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as e:
        raise DegenerateQuadError(f"degenerate correspondences: {e}") from e
    H = np.append(h, 1.0).reshape(3, 3)
    if abs(np.linalg.det(H)) <= 1e-12:
        raise DegenerateQuadError("homography is not invertible")
    return H


def quad_to_rect_homography(quad: Quad, out_w: int, out_h: int) -> np.ndarray:
    """Homography taking the quad corners onto the corner pixel centers of an
    out_w x out_h raster."""
    dst = np.array([[0, 0], [out_w - 1, 0], [out_w - 1, out_h - 1], [0, out_h - 1]],
                   dtype=np.float64)
    return homography_from_points(quad.corners, dst)


def _sample_bilinear(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = data.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None] if data.ndim == 3 else xs - x0
    fy = (ys - y0)[..., None] if data.ndim == 3 else ys - y0
    return (data[y0, x0] * (1 - fx) * (1 - fy) + data[y0, x1] * fx * (1 - fy)
            + data[y1, x0] * (1 - fx) * fy + data[y1, x1] * fx * fy)


def warp_perspective(img: Image, H: np.ndarray, out_w: int, out_h: int) -> Image:
    """Resample ``img`` under the source->destination homography ``H`` onto an
    out_w x out_h raster (bilinear, edge clamped)."""
    Hinv = np.linalg.inv(H)
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    denom = Hinv[2, 0] * xs + Hinv[2, 1] * ys + Hinv[2, 2]
    sx = (Hinv[0, 0] * xs + Hinv[0, 1] * ys + Hinv[0, 2]) / denom
    sy = (Hinv[1, 0] * xs + Hinv[1, 1] * ys + Hinv[1, 2]) / denom
    out = _sample_bilinear(img.data.astype(np.float64), sx, sy)
    return Image(_round_u8(out), dpi=img.dpi)


def dewarp(img: Image, quad: Quad, out_w: int, out_h: int) -> Image:
    """Rectify the quad region onto an axis-aligned out_w x out_h raster."""
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    H = quad_to_rect_homography(quad, out_w, out_h)
    return warp_perspective(img, H, out_w, out_h)


def quad_mask(quad: Quad, w: int, h: int) -> np.ndarray:
    """Boolean raster of pixels whose centers lie inside the quad."""
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    inside = np.ones((h, w), dtype=bool)
    pts = quad.corners
    sign = 0.0
    for i in range(4):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % 4]
        cross = (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0)
        if sign == 0.0:
            sign = 1.0 if cross.mean() >= 0 else -1.0
        inside &= (cross * sign) >= 0
    return inside


def _perpendicular_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    n = np.hypot(*d)
    if n < 1e-12:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    return np.abs((pts[:, 0] - a[0]) * d[1] - (pts[:, 1] - a[1]) * d[0]) / n


def _douglas_peucker(pts: np.ndarray, lo: int, hi: int, tol: float, keep: list):
    if hi <= lo + 1:
        return
    dist = _perpendicular_distance(pts[lo + 1:hi], pts[lo], pts[hi])
    imax = int(dist.argmax())
    if dist[imax] > tol:
        mid = lo + 1 + imax
        _douglas_peucker(pts, lo, mid, tol, keep)
        keep.append(mid)
        _douglas_peucker(pts, mid, hi, tol, keep)


def _trace_boundary(mask: np.ndarray) -> np.ndarray:
    """Moore-neighbor tracing of the external contour of the largest
    component (mask must contain at least one foreground pixel)."""
    padded = np.pad(mask, 1)
    ys, xs = np.nonzero(padded)
    start = (ys[0], xs[0])
    # 8-neighborhood in clockwise order starting east
    nbr = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]
    contour = [start]
    prev_dir = 4  # pretend we arrived moving east (backtrack points west)
    cur = start
    for _ in range(4 * int(padded.sum()) + 8):
        found = False
        for k in range(8):
            d = (prev_dir + 5 + k) % 8  # start scan just after the backtrack
            ny, nx = cur[0] + nbr[d][0], cur[1] + nbr[d][1]
            if padded[ny, nx]:
                if (ny, nx) == start and len(contour) > 2:
                    return np.array([(x - 1, y - 1) for y, x in contour], dtype=np.float64)
                contour.append((ny, nx))
                cur = (ny, nx)
                prev_dir = d
                found = True
                break
        if not found:  # isolated pixel
            break
    return np.array([(x - 1, y - 1) for y, x in contour], dtype=np.float64)


def _fit_line_tls(pts: np.ndarray):
    """Total-least-squares line: (centroid, unit direction)."""
    c = pts.mean(axis=0)
    d = pts - c
    cov = d.T @ d
    w, v = np.linalg.eigh(cov)
    return c, v[:, -1]


def _line_intersection(p1, d1, p2, d2):
    A = np.array([[d1[0], -d2[0]], [d1[1], -d2[1]]])
    if abs(np.linalg.det(A)) < 1e-9:
        return None
    t = np.linalg.solve(A, p2 - p1)
    return p1 + t[0] * d1


def extract_quad(mask: np.ndarray, min_line_frac: float = 0.25,
                 collinearity_tol: float = 2.5) -> Quad:
    """Recover the document quad from a binary foreground mask.

    The external contour of the dominant component is simplified into line
    segments (split-and-merge with ``collinearity_tol``), segments shorter
    than ``min_line_frac * max(w, h)`` are dropped, and the four pairwise
    line intersections nearest the image corners (within a 10%-expanded
    frame) become the corners.
    """
    mask = np.asarray(mask).astype(bool)
    h, w = mask.shape
    if not mask.any():
        raise QuadNotFoundError("empty mask")
    labels, n = ndimage.label(mask)
    if n > 1:
        sizes = ndimage.sum_labels(mask, labels, index=np.arange(1, n + 1))
        mask = labels == (1 + int(sizes.argmax()))
    contour = _trace_boundary(mask)
    if len(contour) < 8:
        raise QuadNotFoundError("contour too short")

    # split-and-merge: seed the split at the two mutually farthest samples
    far = int(np.hypot(*(contour - contour[0]).T).argmax())
    loop = np.vstack([contour[far:], contour[:far + 1]])
    keep = [0]
    _douglas_peucker(loop, 0, len(loop) - 1, collinearity_tol, keep)
    keep.append(len(loop) - 1)
    keep = sorted(set(keep))

    segments = []  # (length, contour point run)
    for a, b in zip(keep[:-1], keep[1:]):
        run = loop[a:b + 1]
        segments.append((float(np.hypot(*(run[-1] - run[0]))), run))
    # merge near-collinear neighbours
    merged = []
    for length, run in segments:
        if merged:
            plen, prun = merged[-1]
            d1 = prun[-1] - prun[0]
            d2 = run[-1] - run[0]
            n1, n2 = np.hypot(*d1), np.hypot(*d2)
            if n1 > 0 and n2 > 0 and abs(np.dot(d1, d2)) / (n1 * n2) > 0.999:
                joined = np.vstack([prun, run[1:]])
                merged[-1] = (float(np.hypot(*(joined[-1] - joined[0]))), joined)
                continue
        merged.append((length, run))

    min_len = min_line_frac * max(w, h)
    lines = [_fit_line_tls(run) for length, run in merged if length >= min_len]
    if len(lines) < 4:
        raise QuadNotFoundError(f"only {len(lines)} contour lines survive filtering")

    candidates = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            p = _line_intersection(lines[i][0], lines[i][1], lines[j][0], lines[j][1])
            if p is None:
                continue
            if -0.1 * w <= p[0] <= 1.1 * w and -0.1 * h <= p[1] <= 1.1 * h:
                candidates.append(p)
    if len(candidates) < 4:
        raise QuadNotFoundError("fewer than 4 line intersections in frame")
    candidates = np.asarray(candidates)
    frame = np.array([[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]], dtype=np.float64)
    picked = []
    for corner in frame:
        picked.append(candidates[np.hypot(*(candidates - corner).T).argmin()])
    picked = np.asarray(picked)
    if len(np.unique(picked.round(3), axis=0)) < 4:
        raise QuadNotFoundError("image corners resolve to duplicate intersections")
    try:
        return Quad.from_points(picked)
    except ValueError as e:
        raise QuadNotFoundError(str(e)) from e
