import numpy as np
import pytest

from docauth.svm import C_GRID, LinearSvm, f1_score, select_c, stratified_folds


def _dual_qp_oracle(X, y, C, iters=200_000, lr=None):
    """Projected-gradient solver for the dual of the same (bias-augmented)
    problem: min 0.5 a^T Q a - e^T a   s.t. 0 <= a <= C."""
    Xa = np.hstack([X, np.ones((len(X), 1))])
    Q = (y[:, None] * Xa) @ (y[:, None] * Xa).T
    n = len(y)
    a = np.zeros(n)
    if lr is None:
        lr = 1.0 / np.linalg.eigvalsh(Q).max()
    for _ in range(iters):
        g = Q @ a - 1.0
        a = np.clip(a - lr * g, 0.0, C)
    w = ((a * y)[:, None] * Xa).sum(axis=0)
    margins = 1.0 - y * (Xa @ w)
    return float(0.5 * w @ w + C * np.maximum(margins, 0.0).sum())


class TestLinearSvm:
    def test_two_point_separable(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        clf = LinearSvm(C=10.0).fit(X, y)
        assert np.all(clf.predict(X) == y)
        boundary = -clf.intercept_ / clf.coef_[0]
        assert -1.0 < boundary < 1.0

    def test_objective_matches_qp_oracle(self):
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(size=(10, 2)) + [1.5, 0.5],
                       rng.normal(size=(10, 2)) - [1.5, 0.5]])
        y = np.array([1.0] * 10 + [-1.0] * 10)
        for C in (0.1, 1.0, 5.0):
            clf = LinearSvm(C=C, tol=1e-6, max_epochs=5000).fit(X, y)
            got = clf.primal_objective(X, y)
            want = _dual_qp_oracle(X, y, C)
            assert got == pytest.approx(want, rel=1e-3)

    def test_duplication_with_halved_c_is_invariant(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(size=(15, 3)) + 1.0,
                       rng.normal(size=(15, 3)) - 1.0])
        y = np.array([1.0] * 15 + [-1.0] * 15)
        a = LinearSvm(C=2.0, tol=1e-8, max_epochs=20000).fit(X, y)
        b = LinearSvm(C=1.0, tol=1e-8, max_epochs=20000).fit(
            np.vstack([X, X]), np.concatenate([y, y]))
        np.testing.assert_allclose(a.coef_, b.coef_, atol=1e-6)
        assert a.intercept_ == pytest.approx(b.intercept_, abs=1e-6)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 4))
        y = np.sign(X[:, 0] + 0.3 * rng.normal(size=40))
        y[y == 0] = 1
        a = LinearSvm(C=1.0, random_state=7).fit(X, y)
        b = LinearSvm(C=1.0, random_state=7).fit(X, y)
        np.testing.assert_array_equal(a.coef_, b.coef_)
        assert a.intercept_ == b.intercept_

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            LinearSvm().fit(np.ones((5, 2)), np.ones(5))

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            LinearSvm().fit(np.ones((4, 2)), np.array([0, 1, 0, 1]))


class TestF1:
    def test_perfect(self):
        y = np.array([1, -1, -1, 1])
        assert f1_score(y, y) == 1.0

    def test_counterfeit_positive_by_default(self):
        y_true = np.array([-1, -1, 1, 1])
        y_pred = np.array([-1, 1, 1, 1])
        # tp=1 fp=0 fn=1 -> f1 = 2/3
        assert f1_score(y_true, y_pred) == pytest.approx(2 / 3)

    def test_degenerate_zero(self):
        assert f1_score(np.array([1, 1]), np.array([1, 1])) == 0.0


class TestSelectC:
    def test_single_value_grid_short_circuits(self):
        c, rep = select_c(np.ones((3, 1)), np.array([1.0, 1.0, -1.0]), grid=[0.5])
        assert c == 0.5
        assert rep["folds_used"] == 0

    def test_separable_prefers_smallest_c(self):
        rng = np.random.default_rng(3)
        X = np.vstack([rng.normal(size=(20, 2)) + 6, rng.normal(size=(20, 2)) - 6])
        y = np.array([1.0] * 20 + [-1.0] * 20)
        c, rep = select_c(X, y, random_state=0)
        assert c == min(C_GRID)
        assert max(rep["scores"].values()) == 1.0

    def test_fold_reduction_recorded(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(13, 2))
        X[:3] += 4
        y = np.array([-1.0] * 3 + [1.0] * 10)
        c, rep = select_c(X, y, n_folds=10, random_state=0)
        assert rep["folds_used"] == 3  # minority class has 3 samples

    def test_scores_match_independent_fold_loop(self):
        rng = np.random.default_rng(5)
        X = np.vstack([rng.normal(size=(25, 3)) + 0.8,
                       rng.normal(size=(25, 3)) - 0.8])
        y = np.array([1.0] * 25 + [-1.0] * 25)
        grid = (0.5, 2.0)
        c, rep = select_c(X, y, grid=grid, n_folds=5, random_state=11)

        # independent re-computation with the same fold assignment
        folds = stratified_folds(y, 5, random_state=11)
        for cval in grid:
            per_fold = []
            for f in range(5):
                clf = LinearSvm(C=cval, random_state=11).fit(X[folds != f],
                                                             y[folds != f])
                pred = clf.predict(X[folds == f])
                truth = y[folds == f]
                tp = ((pred == -1) & (truth == -1)).sum()
                fp = ((pred == -1) & (truth == 1)).sum()
                fn = ((pred == 1) & (truth == -1)).sum()
                per_fold.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
            assert rep["scores"][cval] == pytest.approx(np.mean(per_fold), abs=1e-12)

    def test_stratified_folds_cover_classes(self):
        y = np.array([1.0] * 12 + [-1.0] * 8)
        folds = stratified_folds(y, 4, random_state=0)
        for f in range(4):
            assert set(y[folds == f]) == {1.0, -1.0}
