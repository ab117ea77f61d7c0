"""Pooling encoders that turn a set of local descriptors into one fixed-length
feature vector per region: BoVW, VLAD, Fisher vectors, sparse-coding spatial
pyramids and K-SVD coefficient histograms, plus feature standardization.

Output dimensionalities: BoVW K, VLAD K*D, FV 2*K*D, ScSPM 21*K (levels
0/1/2), K-SVD K.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .codebooks import DiagonalGmm, KMeansCodebook
from .sparse import KsvdDictionary, omp_batch

__all__ = [
    "EncoderConfig",
    "BovwEncoder",
    "VladEncoder",
    "FisherEncoder",
    "ScspmEncoder",
    "KsvdHistEncoder",
    "Standardizer",
    "make_encoder",
    "ENCODER_KINDS",
]

ENCODER_KINDS = ("bovw", "vlad", "fv", "scspm", "ksvd")


@dataclass(frozen=True)
class EncoderConfig:
    """Declarative encoder choice; ``n_words`` defaults follow the evaluated
    setup (512 words for BoVW, 64 for the richer encoders)."""

    kind: str
    n_words: int | None = None
    sparsity: int = 5
    pyramid_levels: tuple[int, ...] = (0, 1, 2)
    random_state: int = 0
    max_fit_samples: int = 200_000

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.n_words is None:
            object.__setattr__(self, "n_words", 512 if self.kind == "bovw" else 64)
        if self.n_words < 1 or self.sparsity < 1:
            raise ValueError("n_words and sparsity must be >= 1")


def make_encoder(cfg: EncoderConfig):
    common = dict(random_state=cfg.random_state, max_fit_samples=cfg.max_fit_samples)
    if cfg.kind == "bovw":
        return BovwEncoder(n_words=cfg.n_words, **common)
    if cfg.kind == "vlad":
        return VladEncoder(n_words=cfg.n_words, **common)
    if cfg.kind == "fv":
        return FisherEncoder(n_components=cfg.n_words, **common)
    if cfg.kind == "scspm":
        return ScspmEncoder(n_atoms=cfg.n_words, sparsity=cfg.sparsity,
                            levels=cfg.pyramid_levels, **common)
    return KsvdHistEncoder(n_atoms=cfg.n_words, sparsity=cfg.sparsity, **common)


def _subsample(X: np.ndarray, max_n: int, seed) -> np.ndarray:
    if max_n is None or X.shape[0] <= max_n:
        return X
    rng = np.random.default_rng(seed)
    return X[rng.choice(X.shape[0], max_n, replace=False)]


def _require_descriptors(desc) -> np.ndarray:
    desc = np.atleast_2d(np.asarray(desc, dtype=np.float64))
    if desc.shape[0] == 0:
        raise ValueError("empty descriptor set")
    return desc


def _signed_sqrt(v: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.sqrt(np.abs(v))


def _l2_normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 1e-12 else v


class BovwEncoder(BaseEstimator):
    """Hard-assignment visual-word histogram, L1 normalized."""

    def __init__(self, n_words=512, random_state=0, max_fit_samples=200_000):
        self.n_words = n_words
        self.random_state = random_state
        self.max_fit_samples = max_fit_samples

    def fit(self, X, y=None):
        X = _subsample(np.asarray(X, dtype=np.float64), self.max_fit_samples,
                       self.random_state)
        self.codebook_ = KMeansCodebook(self.n_words,
                                        random_state=self.random_state).fit(X)
        return self

    @property
    def output_dim(self) -> int:
        return self.n_words

    def encode(self, desc) -> np.ndarray:
        desc = _require_descriptors(desc)
        counts = np.bincount(self.codebook_.predict(desc), minlength=self.n_words)
        return counts / counts.sum()


class VladEncoder(BaseEstimator):
    """Per-word residual aggregation with intra-normalization, signed square
    root and global L2 normalization."""

    def __init__(self, n_words=64, random_state=0, max_fit_samples=200_000):
        self.n_words = n_words
        self.random_state = random_state
        self.max_fit_samples = max_fit_samples

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.n_features_ = X.shape[1]
        X = _subsample(X, self.max_fit_samples, self.random_state)
        self.codebook_ = KMeansCodebook(self.n_words,
                                        random_state=self.random_state).fit(X)
        return self

    @property
    def output_dim(self) -> int:
        return self.n_words * self.n_features_

    def encode(self, desc) -> np.ndarray:
        desc = _require_descriptors(desc)
        centers = self.codebook_.cluster_centers_
        assign = self.codebook_.predict(desc)
        agg = np.zeros_like(centers)
        np.add.at(agg, assign, desc - centers[assign])
        norms = np.linalg.norm(agg, axis=1)
        nz = norms > 1e-12
        agg[nz] /= norms[nz, None]
        return _l2_normalize(_signed_sqrt(agg.ravel()))


class FisherEncoder(BaseEstimator):
    """Improved Fisher vector over a diagonal GMM: mean and variance gradient
    blocks (no weight terms), signed sqrt then global L2."""

    def __init__(self, n_components=64, random_state=0, max_fit_samples=200_000):
        self.n_components = n_components
        self.random_state = random_state
        self.max_fit_samples = max_fit_samples

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.n_features_ = X.shape[1]
        X = _subsample(X, self.max_fit_samples, self.random_state)
        self.gmm_ = DiagonalGmm(self.n_components,
                                random_state=self.random_state).fit(X)
        return self

    @property
    def output_dim(self) -> int:
        return 2 * self.n_components * self.n_features_

    def encode(self, desc) -> np.ndarray:
        desc = _require_descriptors(desc)
        g = self.gmm_
        n = desc.shape[0]
        q = g.predict_proba(desc)             # (n, k)
        s0 = q.sum(axis=0)                    # (k,)
        s1 = q.T @ desc                       # (k, d)
        s2 = q.T @ (desc * desc)              # (k, d)
        mu, var, w = g.means_, g.variances_, g.weights_
        sig = np.sqrt(var)
        g_mu = (s1 - mu * s0[:, None]) / (n * np.sqrt(w)[:, None] * sig)
        g_var = ((s2 - 2.0 * mu * s1 + (mu * mu) * s0[:, None]) / var
                 - s0[:, None]) / (n * np.sqrt(2.0 * w)[:, None])
        fv = np.concatenate([g_mu.ravel(), g_var.ravel()])
        return _l2_normalize(_signed_sqrt(fv))


class ScspmEncoder(BaseEstimator):
    """Sparse-code spatial pyramid: OMP codes over a learned dictionary,
    max-pooled per pyramid cell (2^l x 2^l grids), concatenated and L2
    normalized.

    ``encode`` needs descriptor positions and the region size to resolve
    cell membership.
    """

    def __init__(self, n_atoms=64, sparsity=5, levels=(0, 1, 2), random_state=0,
                 max_fit_samples=200_000, dictionary=None):
        self.n_atoms = n_atoms
        self.sparsity = sparsity
        self.levels = tuple(levels)
        self.random_state = random_state
        self.max_fit_samples = max_fit_samples
        self.dictionary = dictionary

    def fit(self, X, y=None):
        if self.dictionary is not None:
            self.dictionary_ = self.dictionary
            return self
        X = _subsample(np.asarray(X, dtype=np.float64), self.max_fit_samples,
                       self.random_state)
        self.dictionary_ = KsvdDictionary(self.n_atoms, self.sparsity,
                                          random_state=self.random_state).fit(X)
        return self

    @property
    def n_cells(self) -> int:
        return sum(4 ** l for l in self.levels)

    @property
    def output_dim(self) -> int:
        return self.n_cells * self.n_atoms

    def encode(self, desc, positions, region_size) -> np.ndarray:
        desc = _require_descriptors(desc)
        positions = np.atleast_2d(np.asarray(positions))
        if positions.shape[0] != desc.shape[0]:
            raise ValueError("positions and descriptors disagree on count")
        w, h = region_size
        acode = np.abs(omp_batch(desc, self.dictionary_.components_, self.sparsity))
        blocks = []
        for l in self.levels:
            nc = 2 ** l
            cx = np.clip((positions[:, 0] * nc // max(w, 1)), 0, nc - 1).astype(np.intp)
            cy = np.clip((positions[:, 1] * nc // max(h, 1)), 0, nc - 1).astype(np.intp)
            cell = cy * nc + cx
            pooled = np.zeros((nc * nc, self.n_atoms))
            np.maximum.at(pooled, cell, acode)
            blocks.append(pooled.ravel())
        return _l2_normalize(np.concatenate(blocks))


class KsvdHistEncoder(BaseEstimator):
    """Histogram of absolute OMP coefficients over a K-SVD dictionary, L1
    normalized."""

    def __init__(self, n_atoms=64, sparsity=5, random_state=0,
                 max_fit_samples=200_000, dictionary=None):
        self.n_atoms = n_atoms
        self.sparsity = sparsity
        self.random_state = random_state
        self.max_fit_samples = max_fit_samples
        self.dictionary = dictionary

    def fit(self, X, y=None):
        if self.dictionary is not None:
            self.dictionary_ = self.dictionary
            return self
        X = _subsample(np.asarray(X, dtype=np.float64), self.max_fit_samples,
                       self.random_state)
        self.dictionary_ = KsvdDictionary(self.n_atoms, self.sparsity,
                                          random_state=self.random_state).fit(X)
        return self

    @property
    def output_dim(self) -> int:
        return self.n_atoms

    def encode(self, desc) -> np.ndarray:
        desc = _require_descriptors(desc)
        hist = np.abs(omp_batch(desc, self.dictionary_.components_,
                                self.sparsity)).sum(axis=0)
        total = hist.sum()
        return hist / total if total > 0 else hist


class Standardizer(BaseEstimator):
    """Per-feature zero-mean unit-variance scaling with a floored sigma."""

    def __init__(self, sigma_floor=1e-8):
        self.sigma_floor = sigma_floor

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise ValueError("standardizer requires at least 2 samples")
        self.mean_ = X.mean(axis=0)
        self.scale_ = np.maximum(X.std(axis=0), self.sigma_floor)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=np.float64) * self.scale_ + self.mean_
