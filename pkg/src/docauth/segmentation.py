"""Guide-driven trimap segmentation: iterated color-mixture estimation with an
exact min-cut over the 8-connected pixel grid.

The guide quad seeds the trimap; definite labels are hard constraints, the
uncertain band is resolved by alternating full-covariance GMM refits (warm
started, so the labeling energy never increases) with augmenting-path max-flow
cuts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .codebooks import KMeansCodebook
from .imaging import Image, resize
from .rectify import Quad, extract_quad, quad_mask

__all__ = ["Trimap", "BACKGROUND", "PROBABLE_FG", "DEFINITE_FG",
           "build_trimap", "segment", "segment_document"]

BACKGROUND = 0
PROBABLE_FG = 1
DEFINITE_FG = 2

_UNARY_CAP = 50.0
_INT_SCALE = 100.0
_HARD_COST = 10_000_000  # pre-scaled integer capacity for hard constraints


@dataclass(frozen=True)
class Trimap:
    """Per-pixel seed labels: 0 background, 1 probable foreground, 2 definite
    foreground."""

    labels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.labels, dtype=np.uint8)
        if a.ndim != 2:
            raise ValueError("trimap labels must be 2-D")
        if not (a == DEFINITE_FG).any() or not (a == BACKGROUND).any():
            raise ValueError("trimap needs at least one definite-foreground "
                             "and one background pixel")
        object.__setattr__(self, "labels", a)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def build_trimap(w: int, h: int, guide: Quad, margin: float) -> Trimap:
    """Label pixels against the guide quad: strictly inside the quad shrunk by
    ``margin`` is definite foreground, within the quad expanded by ``margin``
    probable foreground, the rest background.

    The shrink/expand factor is 1 -/+ 2*margin about the centroid, so an
    axis-aligned guide gets an uncertainty band of width 2*margin times the
    corresponding side length.
    """
    if not 0.0 < margin < 0.5:
        raise ValueError("margin must be in (0, 0.5)")
    c = guide.corners
    if (c[:, 0].min() < 0 or c[:, 1].min() < 0
            or c[:, 0].max() > w - 1 or c[:, 1].max() > h - 1):
        raise ValueError("guide quad extends outside the image")
    inner = guide.scaled_about_centroid(1.0 - 2.0 * margin)
    outer = guide.scaled_about_centroid(1.0 + 2.0 * margin)
    labels = np.zeros((h, w), dtype=np.uint8)
    labels[quad_mask(outer, w, h)] = PROBABLE_FG
    labels[quad_mask(inner, w, h)] = DEFINITE_FG
    return Trimap(labels)


class _FullGmm:
    """Small full-covariance color mixture for region models."""

    def __init__(self, n_components=5, floor_frac=1e-3, seed=0):
        self.k = n_components
        self.floor_frac = floor_frac
        self.seed = seed
        self.weights = None

    def fit(self, X: np.ndarray, n_iter: int) -> "_FullGmm":
        d = X.shape[1]
        floor = max(self.floor_frac * float(X.var(axis=0).mean()), 1e-4)
        if self.weights is None:
            k = min(self.k, max(1, len(np.unique(X, axis=0))))
            km = KMeansCodebook(k, random_state=self.seed, max_iter=10).fit(X)
            labels = km.predict(X)
            self.means = km.cluster_centers_.copy()
            self.weights = np.maximum(np.bincount(labels, minlength=k), 1.0)
            self.weights /= self.weights.sum()
            self.covs = np.empty((k, d, d))
            for j in range(k):
                pts = X[labels == j]
                if len(pts) > d:
                    self.covs[j] = np.cov(pts.T) + floor * np.eye(d)
                else:
                    self.covs[j] = np.cov(X.T) + floor * np.eye(d)
        for _ in range(n_iter):
            logr = self._component_logpdf(X) + np.log(self.weights)[None, :]
            m = logr.max(axis=1, keepdims=True)
            r = np.exp(logr - m)
            r /= r.sum(axis=1, keepdims=True)
            nk = np.maximum(r.sum(axis=0), 1e-9)
            self.weights = nk / nk.sum()
            self.means = (r.T @ X) / nk[:, None]
            for j in range(self.covs.shape[0]):
                dx = X - self.means[j]
                cov = (r[:, j, None] * dx).T @ dx / nk[j]
                self.covs[j] = cov + floor * np.eye(d)
        return self

    def _component_logpdf(self, X):
        n, d = X.shape
        out = np.empty((n, self.covs.shape[0]))
        for j in range(self.covs.shape[0]):
            chol = np.linalg.cholesky(self.covs[j])
            sol = solve_triangular(chol, (X - self.means[j]).T, lower=True)
            quad = (sol * sol).sum(axis=0)
            logdet = 2.0 * np.log(np.diag(chol)).sum()
            out[:, j] = -0.5 * (quad + logdet + d * np.log(2 * np.pi))
        return out

    def score_samples(self, X):
        logr = self._component_logpdf(X) + np.log(self.weights)[None, :]
        m = logr.max(axis=1)
        return m + np.log(np.exp(logr - m[:, None]).sum(axis=1))


def _grid_edges(h: int, w: int, colors: np.ndarray, gamma: float):
    """8-connected pairwise capacities gamma/dist * exp(-beta ||ci-cj||^2),
    with beta set from the mean squared neighbour color difference."""
    idx = np.arange(h * w).reshape(h, w)
    pairs_i, pairs_j, sqd, dist = [], [], [], []
    for dy, dx in ((0, 1), (1, 0), (1, 1), (1, -1)):
        a = idx[0:h - dy, max(0, -dx):w - max(0, dx)].ravel()
        b = idx[dy:h, max(0, dx):w - max(0, -dx)].ravel()
        diff = colors[a] - colors[b]
        pairs_i.append(a)
        pairs_j.append(b)
        sqd.append((diff * diff).sum(axis=1))
        dist.append(np.full(a.shape, np.hypot(dy, dx)))
    pairs_i = np.concatenate(pairs_i)
    pairs_j = np.concatenate(pairs_j)
    sqd = np.concatenate(sqd)
    dist = np.concatenate(dist)
    mean_sq = sqd.mean()
    beta = 0.0 if mean_sq <= 0 else 1.0 / (2.0 * mean_sq)
    weights = gamma / dist * np.exp(-beta * sqd)
    return pairs_i, pairs_j, weights


def _min_cut(n: int, ei, ej, ew, src_cap, snk_cap) -> np.ndarray:
    """Exact min-cut via integer max-flow; returns the source-side mask."""
    src, snk = n, n + 1
    cap = np.concatenate([ew, ew, src_cap, snk_cap])
    rows = np.concatenate([ei, ej, np.full(n, src), np.arange(n)])
    cols = np.concatenate([ej, ei, np.arange(n), np.full(n, snk)])
    keep = cap > 0
    g = csr_matrix((cap[keep].astype(np.int32), (rows[keep], cols[keep])),
                   shape=(n + 2, n + 2))
    res = maximum_flow(g, src, snk)
    residual = g - res.flow
    residual.data = np.maximum(residual.data, 0)
    residual.eliminate_zeros()
    reach = breadth_first_order(residual, src, directed=True,
                                return_predecessors=False)
    fg = np.zeros(n, dtype=bool)
    fg[reach[reach < n]] = True
    return fg


def _labeling_energy(fg, unary_fg, unary_bg, ei, ej, ew_float):
    data = np.where(fg, unary_fg, unary_bg).sum()
    boundary = ew_float[fg[ei] != fg[ej]].sum()
    return float(data + boundary)


def segment(img: Image, trimap: Trimap, iterations: int = 3, gamma: float = 50.0,
            n_components: int = 5, seed: int = 0):
    """Binary foreground mask honoring the trimap's hard labels.

    Returns ``(mask, energy_trace)``; the energy of the cut labeling is
    non-increasing across iterations.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if (trimap.height, trimap.width) != (img.height, img.width):
        raise ValueError("trimap/image size mismatch")
    labels = trimap.labels.ravel()
    h, w = img.height, img.width
    colors = img.data.reshape(h * w, -1).astype(np.float64)

    hard_fg = labels == DEFINITE_FG
    hard_bg = labels == BACKGROUND
    if not (labels == PROBABLE_FG).any():
        return trimap.labels == DEFINITE_FG, []

    ei, ej, ew_float = _grid_edges(h, w, colors, gamma)
    ew = np.round(ew_float * _INT_SCALE).astype(np.int64)

    fg = ~hard_bg  # probable foreground starts as foreground
    fg_gmm = _FullGmm(n_components, seed=seed)
    bg_gmm = _FullGmm(n_components, seed=seed + 1)
    trace = []
    for it in range(iterations):
        n_em = 8 if it == 0 else 3
        fg_gmm.fit(colors[fg], n_em)
        bg_gmm.fit(colors[~fg], n_em)
        unary_fg = np.clip(-fg_gmm.score_samples(colors), 0.0, _UNARY_CAP)
        unary_bg = np.clip(-bg_gmm.score_samples(colors), 0.0, _UNARY_CAP)
        # cutting the source link assigns background and pays the bg cost
        src_cap = np.round(unary_bg * _INT_SCALE).astype(np.int64)
        snk_cap = np.round(unary_fg * _INT_SCALE).astype(np.int64)
        src_cap[hard_fg] = _HARD_COST
        snk_cap[hard_fg] = 0
        snk_cap[hard_bg] = _HARD_COST
        src_cap[hard_bg] = 0
        fg = _min_cut(h * w, ei, ej, ew, src_cap, snk_cap)
        fg[hard_fg] = True
        fg[hard_bg] = False
        trace.append(_labeling_energy(fg, np.clip(-fg_gmm.score_samples(colors), 0, _UNARY_CAP),
                                      np.clip(-bg_gmm.score_samples(colors), 0, _UNARY_CAP),
                                      ei, ej, ew_float))
    return fg.reshape(h, w), trace


def _upscale_mask_nn(mask: np.ndarray, w: int, h: int) -> np.ndarray:
    sh, sw = mask.shape
    ys = np.minimum(((np.arange(h) + 0.5) * sh / h).astype(np.intp), sh - 1)
    xs = np.minimum(((np.arange(w) + 0.5) * sw / w).astype(np.intp), sw - 1)
    return mask[ys][:, xs]


def segment_document(img: Image, guide: Quad, margin: float = 0.08,
                     iterations: int = 3, max_dim: int = 256,
                     min_line_frac: float = 0.25, seed: int = 0):
    """Full crop pipeline: downscale, trimap from the guide, min-cut
    segmentation, nearest-neighbor mask upscale, then quad recovery at full
    resolution. Returns ``(mask, quad)``."""
    h, w = img.height, img.width
    scale = max(w, h) / max_dim if max(w, h) > max_dim else 1.0
    if scale > 1.0:
        sw, sh = max(2, int(round(w / scale))), max(2, int(round(h / scale)))
        small = resize(img, sw, sh)
        fx, fy = sw / w, sh / h
        guide_small = Quad(np.clip(guide.corners * [fx, fy], 0,
                                   [sw - 1, sh - 1]))
    else:
        small, guide_small = img, guide
    trimap = build_trimap(small.width, small.height, guide_small, margin)
    small_mask, _ = segment(small, trimap, iterations=iterations, seed=seed)
    mask = _upscale_mask_nn(small_mask, w, h) if scale > 1.0 else small_mask
    quad = extract_quad(mask, min_line_frac=min_line_frac)
    return mask, quad
