"""Orthogonal matching pursuit and K-SVD dictionary learning.

Atoms are stored as unit-norm rows, sklearn ``components_`` style; signals
are rows as well.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

__all__ = ["omp", "omp_batch", "KsvdDictionary"]

_RESIDUAL_TOL = 1e-9


def omp_batch(Y, atoms, sparsity, chunk=20_000):
    """Sparse-code each row of ``Y`` over ``atoms`` with at most ``sparsity``
    nonzeros per signal.

    Greedy selection by maximal |correlation| with the residual (ties to the
    lowest atom index), full least-squares refit over the active set at every
    step, early stop when the residual norm drops below 1e-9. Zero signals
    return the zero code.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    atoms = np.asarray(atoms, dtype=np.float64)
    k = atoms.shape[0]
    t_max = int(sparsity)
    if t_max < 1:
        raise ValueError("sparsity must be >= 1")
    if t_max > min(k, atoms.shape[1]):
        raise ValueError(f"sparsity {t_max} exceeds min(n_atoms, dim) = "
                         f"{min(k, atoms.shape[1])}")
    out = np.zeros((Y.shape[0], k))
    gram = atoms @ atoms.T
    for lo in range(0, Y.shape[0], chunk):
        out[lo:lo + chunk] = _omp_chunk(Y[lo:lo + chunk], atoms, gram, t_max)
    return out


def _omp_chunk(Y, atoms, gram, t_max):
    n, k = Y.shape[0], atoms.shape[0]
    a0 = Y @ atoms.T                      # atom/signal correlations
    ysq = (Y * Y).sum(axis=1)
    corr = a0.copy()
    selected = np.zeros((n, k), dtype=bool)
    active = np.zeros((n, t_max), dtype=np.intp)
    coefs = np.zeros((n, t_max))
    n_active = np.zeros(n, dtype=np.intp)
    alive = ysq > _RESIDUAL_TOL ** 2
    ridge = 1e-12 * np.eye(t_max)

    for t in range(t_max):
        if not alive.any():
            break
        rows = np.flatnonzero(alive)
        c = np.abs(corr[rows])
        c[selected[rows]] = -1.0
        pick = c.argmax(axis=1)
        active[rows, t] = pick
        selected[rows, pick] = True
        n_active[rows] = t + 1

        s = active[rows, :t + 1]                          # (m, t+1)
        gss = gram[s[:, :, None], s[:, None, :]]          # (m, t+1, t+1)
        rhs = np.take_along_axis(a0[rows], s, axis=1)     # (m, t+1)
        sol = np.linalg.solve(gss + ridge[:t + 1, :t + 1], rhs[..., None])[..., 0]
        coefs[rows, :t + 1] = sol

        new_corr = a0[rows].copy()
        for tt in range(t + 1):
            new_corr -= sol[:, tt, None] * gram[s[:, tt]]
        corr[rows] = new_corr
        rsq = ysq[rows] - (sol * rhs).sum(axis=1)
        alive[rows] = rsq > _RESIDUAL_TOL ** 2

    codes = np.zeros((n, k))
    for t in range(t_max):
        mask = n_active > t
        codes[np.flatnonzero(mask), active[mask, t]] = coefs[mask, t]
    return codes


def omp(y, atoms, sparsity):
    """Single-signal orthogonal matching pursuit; returns a dense (k,) code."""
    return omp_batch(np.asarray(y)[None, :], atoms, sparsity)[0]


class KsvdDictionary(BaseEstimator):
    """Dictionary learning by alternating OMP coding with per-atom rank-1
    updates of the restricted residual (power-iteration SVD approximation,
    warm-started from the current atom so each update is non-increasing).

    Unused atoms are replaced by the currently worst-reconstructed signal.
    ``error_trace_`` records the mean squared residual after each full
    update sweep.
    """

    def __init__(self, n_atoms, sparsity, n_iter=30, random_state=0, power_iters=4):
        self.n_atoms = n_atoms
        self.sparsity = sparsity
        self.n_iter = n_iter
        self.random_state = random_state
        self.power_iters = power_iters

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        k = self.n_atoms
        if n < k:
            raise ValueError(f"need at least {k} samples, got {n}")
        rng = np.random.default_rng(self.random_state)
        norms = np.linalg.norm(X, axis=1)
        candidates = np.flatnonzero(norms > 1e-12)
        if candidates.size < k:
            raise ValueError("not enough nonzero signals to seed the dictionary")
        seed_rows = rng.choice(candidates, size=k, replace=False)
        atoms = X[seed_rows] / norms[seed_rows, None]

        trace = []
        for _ in range(self.n_iter):
            codes = omp_batch(X, atoms, self.sparsity)
            resid = X - codes @ atoms
            replaced = set()
            for j in range(k):
                users = np.flatnonzero(codes[:, j])
                if users.size == 0:
                    worst = self._worst_signal(resid, replaced)
                    if worst is None:
                        continue
                    atoms[j] = X[worst] / np.linalg.norm(X[worst])
                    replaced.add(worst)
                    continue
                e = resid[users] + np.outer(codes[users, j], atoms[j])
                dvec = atoms[j]
                for _ in range(self.power_iters):
                    g = e @ dvec
                    dnew = e.T @ g
                    nn = np.linalg.norm(dnew)
                    if nn < 1e-12:
                        break
                    dvec = dnew / nn
                g = e @ dvec
                atoms[j] = dvec
                codes[users, j] = g
                resid[users] = e - np.outer(g, dvec)
            trace.append(float((resid * resid).sum() / n))
        self.components_ = atoms
        self.error_trace_ = np.asarray(trace)
        self.n_features_in_ = d
        return self

    @staticmethod
    def _worst_signal(resid, replaced):
        errs = (resid * resid).sum(axis=1)
        for idx in np.argsort(errs)[::-1]:
            if idx not in replaced and errs[idx] > 1e-18:
                return int(idx)
        return None

    def transform(self, X):
        return omp_batch(X, self.components_, self.sparsity)
