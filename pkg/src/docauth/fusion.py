"""Document-level decision fusion: multivariate Bernoulli naive Bayes over
the per-ROI counterfeit flags."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

__all__ = ["BernoulliFusion", "GENUINE", "COUNTERFEIT"]

GENUINE = 0
COUNTERFEIT = 1


class BernoulliFusion(BaseEstimator):
    """Smoothed per-class Bernoulli model of the ROI flag vector.

    ``fit`` takes the binary flag matrix (1 = ROI judged counterfeit) and the
    document labels (0 genuine / 1 counterfeit). Prediction maximizes
    ``log prior + sum_i [x_i log p_i + (1 - x_i) log(1 - p_i)]``; exact ties
    resolve to counterfeit as the fail-safe.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.intp)
        if X.ndim != 2:
            raise ValueError("X must be (n_documents, n_rois)")
        if set(np.unique(X)) - {0.0, 1.0}:
            raise ValueError("flags must be binary")
        if np.unique(y).size < 2:
            raise ValueError("training data contains a single class")
        a = float(self.alpha)
        if a < 0:
            raise ValueError("alpha must be >= 0")
        n_rois = X.shape[1]
        self.p_ = np.empty((2, n_rois))
        self.priors_ = np.empty(2)
        for cls in (GENUINE, COUNTERFEIT):
            rows = y == cls
            n_cls = int(rows.sum())
            self.p_[cls] = (X[rows].sum(axis=0) + a) / (n_cls + 2.0 * a)
            self.priors_[cls] = n_cls / len(y)
        self.n_rois_ = n_rois
        return self

    def _joint_log_likelihood(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_rois_:
            raise ValueError(f"expected {self.n_rois_} flags, got {x.shape[-1]}")
        logp = np.log(self.p_)
        log1p = np.log1p(-self.p_)
        return np.log(self.priors_) + x @ logp.T + (1.0 - x) @ log1p.T

    def predict_proba(self, x):
        """Class posteriors (genuine, counterfeit) for one flag vector."""
        jll = self._joint_log_likelihood(np.atleast_2d(x))[0]
        jll = jll - jll.max()
        post = np.exp(jll)
        return post / post.sum()

    def predict(self, x):
        jll = self._joint_log_likelihood(np.atleast_2d(x))[0]
        # exact tie resolves to counterfeit
        return COUNTERFEIT if jll[COUNTERFEIT] >= jll[GENUINE] else GENUINE

    def decide(self, x):
        """(predicted class, posterior of that class)."""
        cls = self.predict(x)
        return cls, float(self.predict_proba(x)[cls])
