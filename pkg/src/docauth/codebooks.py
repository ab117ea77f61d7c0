"""Visual-word codebooks: Lloyd k-means and diagonal-covariance Gaussian mixtures."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator

from .errors import DegenerateInputError

__all__ = ["KMeansCodebook", "DiagonalGmm"]


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (n, k)."""
    d = (X * X).sum(axis=1)[:, None] - 2.0 * (X @ C.T) + (C * C).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = _sq_dists(X, centers[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
            continue
        centers[j] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, _sq_dists(X, centers[j:j + 1]).ravel())
    return centers


class KMeansCodebook(BaseEstimator):
    """Lloyd's algorithm with k-means++ seeding.

    Converges when the largest centroid shift drops below ``tol`` or after
    ``max_iter`` sweeps; empty clusters are re-seeded from the point farthest
    from its assigned centroid. ``objective_trace_`` records the within-cluster
    sum of squares after every assignment step.
    """

    def __init__(self, n_clusters, random_state=0, tol=1e-4, max_iter=100):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        k = self.n_clusters
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        if n < k:
            raise ValueError(f"need at least {k} samples, got {n}")
        rng = np.random.default_rng(self.random_state)
        centers = _kmeanspp_init(X, k, rng)
        trace = []
        for _ in range(self.max_iter):
            d2 = _sq_dists(X, centers)
            labels = d2.argmin(axis=1)
            mind2 = d2[np.arange(n), labels]
            trace.append(float(mind2.sum()))
            new = np.zeros_like(centers)
            counts = np.bincount(labels, minlength=k).astype(np.float64)
            np.add.at(new, labels, X)
            nonempty = counts > 0
            new[nonempty] /= counts[nonempty, None]
            if not nonempty.all():
                order = np.argsort(mind2)[::-1]
                taken = 0
                for j in np.flatnonzero(~nonempty):
                    new[j] = X[order[taken]]
                    taken += 1
            shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
            centers = new
            if shift < self.tol:
                break
        self.cluster_centers_ = centers
        self.objective_trace_ = np.asarray(trace)
        self.n_features_in_ = d
        if k > 1:
            m = _sq_dists(centers, centers)
            np.fill_diagonal(m, np.inf)
            if m.min() <= 1e-18:
                raise DegenerateInputError("duplicate centroids; data has fewer "
                                           f"than {k} distinct points")
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        return _sq_dists(X, self.cluster_centers_).argmin(axis=1)


class DiagonalGmm(BaseEstimator):
    """EM-fitted Gaussian mixture with diagonal covariances.

    Initialized from a k-means codebook on the same seed. Per-dimension
    variances are floored at ``var_floor_frac`` times the data variance.
    Stops when the mean per-sample log-likelihood gain falls below ``tol``;
    ``ll_trace_`` records that mean log-likelihood per EM iteration.
    """

    def __init__(self, n_components, random_state=0, tol=1e-5, max_iter=200,
                 var_floor_frac=1e-4):
        self.n_components = n_components
        self.random_state = random_state
        self.tol = tol
        self.max_iter = max_iter
        self.var_floor_frac = var_floor_frac

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        k = self.n_components
        if n < 2 * k:
            raise ValueError(f"need at least {2 * k} samples for {k} components, got {n}")
        floor = np.maximum(self.var_floor_frac * X.var(axis=0), 1e-12)

        km = KMeansCodebook(k, random_state=self.random_state).fit(X)
        labels = km.predict(X)
        means = km.cluster_centers_.copy()
        weights = np.maximum(np.bincount(labels, minlength=k), 1) / n
        weights /= weights.sum()
        variances = np.empty((k, d))
        gvar = np.maximum(X.var(axis=0), floor)
        for j in range(k):
            pts = X[labels == j]
            variances[j] = np.maximum(pts.var(axis=0), floor) if len(pts) > 1 else gvar

        trace = []
        prev = -np.inf
        for _ in range(self.max_iter):
            log_r = self._log_joint(X, weights, means, variances)
            norm = logsumexp(log_r, axis=1)
            ll = float(norm.mean())
            trace.append(ll)
            resp = np.exp(log_r - norm[:, None])
            nk = np.maximum(resp.sum(axis=0), 1e-12)
            weights = nk / nk.sum()
            means = (resp.T @ X) / nk[:, None]
            variances = np.maximum((resp.T @ (X * X)) / nk[:, None] - means ** 2, floor)
            if ll - prev < self.tol and np.isfinite(prev):
                break
            prev = ll
        self.weights_ = weights
        self.means_ = means
        self.variances_ = variances
        self.ll_trace_ = np.asarray(trace)
        self.n_features_in_ = d
        return self

    @staticmethod
    def _log_joint(X, weights, means, variances):
        # log w_k + log N(x | mu_k, diag sigma_k^2), shape (n, k)
        inv = 1.0 / variances
        quad = ((X * X) @ inv.T - 2.0 * (X @ (means * inv).T)
                + (means * means * inv).sum(axis=1)[None, :])
        logdet = np.log(variances).sum(axis=1)
        return (np.log(weights)[None, :]
                - 0.5 * (quad + logdet[None, :] + X.shape[1] * np.log(2 * np.pi)))

    def predict_proba(self, X):
        X = np.asarray(X, dtype=np.float64)
        log_r = self._log_joint(X, self.weights_, self.means_, self.variances_)
        return np.exp(log_r - logsumexp(log_r, axis=1)[:, None])

    def score_samples(self, X):
        X = np.asarray(X, dtype=np.float64)
        return logsumexp(self._log_joint(X, self.weights_, self.means_,
                                         self.variances_), axis=1)
