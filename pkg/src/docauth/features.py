"""Dense local texture descriptors and principal-component reduction.

Descriptors are SIFT-style 4x4x8 gradient histograms sampled on a regular
grid at a single fixed scale; the classifiers downstream consume them after
projection onto a reduced principal basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator

from .imaging import Image

__all__ = ["DenseSiftConfig", "DescriptorSet", "dense_sift", "PcaReducer"]


@dataclass(frozen=True)
class DenseSiftConfig:
    """Grid stride and histogram geometry for dense descriptor extraction."""

    step: int = 4
    bin_size: int = 8
    orientations: int = 8
    spatial_bins: int = 4

    def __post_init__(self):
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if self.bin_size < 1 or self.spatial_bins < 1 or self.orientations < 1:
            raise ValueError("bin_size, spatial_bins and orientations must be >= 1")

    @property
    def patch_size(self) -> int:
        return self.spatial_bins * self.bin_size

    @property
    def dim(self) -> int:
        return self.spatial_bins ** 2 * self.orientations


@dataclass(frozen=True)
class DescriptorSet:
    """Row-per-descriptor matrix plus the grid position (patch center) of each row."""

    descriptors: np.ndarray  # (n, dim) float32
    positions: np.ndarray    # (n, 2) int, (x, y) pixel coordinates

    def __post_init__(self):
        if self.descriptors.shape[0] != self.positions.shape[0]:
            raise ValueError("descriptors and positions disagree on count")

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]

    def __len__(self) -> int:
        return self.descriptors.shape[0]


_CLIP = 0.2


def _axis_weights(cfg: DenseSiftConfig) -> np.ndarray:
    """Per-axis pooling weights (spatial_bins, patch): bilinear spatial-bin
    vote sharing times the Gaussian patch window (sigma = patch/2)."""
    p = cfg.patch_size
    u = np.arange(p, dtype=np.float64)
    centers = (np.arange(cfg.spatial_bins) + 0.5) * cfg.bin_size - 0.5
    tri = np.maximum(0.0, 1.0 - np.abs(u[None, :] - centers[:, None]) / cfg.bin_size)
    sigma = p / 2.0
    gauss = np.exp(-((u - (p - 1) / 2.0) ** 2) / (2.0 * sigma * sigma))
    return tri * gauss[None, :]


def _orientation_maps(gray: np.ndarray, n_orient: int):
    """Gradient magnitude linearly shared between the two nearest orientation
    bins; bin centers sit at (k + 1/2) * 2pi / n_orient."""
    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    theta = np.arctan2(gy, gx)
    t = theta / (2.0 * np.pi / n_orient) - 0.5
    k0 = np.floor(t).astype(np.int64) % n_orient
    k1 = (k0 + 1) % n_orient
    w1 = t - np.floor(t)
    maps = np.empty((n_orient,) + gray.shape, dtype=np.float64)
    for k in range(n_orient):
        maps[k] = mag * ((1.0 - w1) * (k0 == k) + w1 * (k1 == k))
    return maps


def dense_sift(img: Image | np.ndarray, cfg: DenseSiftConfig = DenseSiftConfig()) -> DescriptorSet:
    """Extract L2-normalized, 0.2-clipped gradient-histogram descriptors on a
    regular grid of fully contained patches.

    Positions are patch centers. Patches with no gradient energy yield the
    zero vector.
    """
    gray = img.data if isinstance(img, Image) else np.asarray(img)
    if gray.ndim != 2:
        raise ValueError("dense_sift requires a grayscale image")
    h, w = gray.shape
    p = cfg.patch_size
    if h < p or w < p:
        raise ValueError(f"image {w}x{h} smaller than one {p}px patch")
    gray = gray.astype(np.float64) / 255.0

    ys = np.arange(0, h - p + 1, cfg.step)
    xs = np.arange(0, w - p + 1, cfg.step)
    n = len(ys) * len(xs)
    nb, no = cfg.spatial_bins, cfg.orientations
    weights = _axis_weights(cfg)  # (nb, p)
    maps = _orientation_maps(gray, no)

    desc = np.empty((n, nb, nb, no), dtype=np.float64)
    for k in range(no):
        win = sliding_window_view(maps[k], (p, p))[::cfg.step, ::cfg.step]
        # contract patch rows then columns against the axis weights
        t = np.tensordot(win, weights, axes=([3], [1]))   # (ny, nx, p_v, nb_x)
        t = np.tensordot(t, weights, axes=([2], [1]))     # (ny, nx, nb_x, nb_y)
        desc[:, :, :, k] = t.transpose(0, 1, 3, 2).reshape(n, nb, nb)
    desc = desc.reshape(n, nb * nb * no)

    norms = np.linalg.norm(desc, axis=1)
    nz = norms > 1e-12
    desc[nz] /= norms[nz, None]
    np.clip(desc, 0.0, _CLIP, out=desc)
    norms = np.linalg.norm(desc, axis=1)
    nz = norms > 1e-12
    desc[nz] /= norms[nz, None]
    desc[~nz] = 0.0

    gx, gy = np.meshgrid(xs, ys)
    positions = np.stack([gx.ravel() + p // 2, gy.ravel() + p // 2], axis=1)
    return DescriptorSet(descriptors=desc.astype(np.float32), positions=positions)


class PcaReducer(BaseEstimator):
    """Principal-component projection fitted by SVD of the centered data.

    Components carry a deterministic sign (largest-magnitude entry positive)
    and are stored sklearn-style as rows of ``components_``.

    Parameters
    ----------
    n_components : target dimensionality D.
    whiten : divide projections by sqrt(eigenvalue) when true.
    on_rank_deficient : "error" raises when the data rank is below D,
        "reduce" shrinks D to the rank instead.
    max_samples : fit on at most this many rows, subsampled with the seeded RNG.
    """

    def __init__(self, n_components, whiten=False, on_rank_deficient="error",
                 max_samples=200_000, random_state=0):
        self.n_components = n_components
        self.whiten = whiten
        self.on_rank_deficient = on_rank_deficient
        self.max_samples = max_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        n, d = X.shape
        if n < 2:
            raise ValueError("PCA requires at least 2 samples")
        if not 1 <= self.n_components <= min(n - 1, d):
            raise ValueError(
                f"n_components={self.n_components} outside [1, min(n-1, d)]={min(n - 1, d)}")
        if self.max_samples is not None and n > self.max_samples:
            rng = np.random.default_rng(self.random_state)
            X = X[rng.choice(n, self.max_samples, replace=False)]
            n = self.max_samples
        mean = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
        eigvals = (s * s) / (n - 1)
        rank = int((s > s[0] * max(n, d) * np.finfo(np.float64).eps).sum()) if s.size else 0
        k = self.n_components
        if rank < k:
            if self.on_rank_deficient == "reduce":
                k = max(rank, 1)
            else:
                raise ValueError(f"data rank {rank} below n_components={self.n_components}")
        comps = vt[:k]
        flip = np.take_along_axis(
            comps, np.abs(comps).argmax(axis=1)[:, None], axis=1).ravel() < 0
        comps = comps * np.where(flip, -1.0, 1.0)[:, None]
        self.mean_ = mean
        self.components_ = comps
        self.eigenvalues_ = eigvals[:k]
        self.n_features_in_ = d
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        Z = (X - self.mean_) @ self.components_.T
        if self.whiten:
            Z /= np.sqrt(np.maximum(self.eigenvalues_, 1e-12))
        return Z

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def inverse_transform(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        if self.whiten:
            Z = Z * np.sqrt(np.maximum(self.eigenvalues_, 1e-12))
        return Z @ self.components_ + self.mean_
