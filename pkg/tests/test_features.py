import numpy as np
import pytest

from docauth.features import DenseSiftConfig, PcaReducer, dense_sift
from docauth.imaging import Image


def _sift_oracle_patch(gray: np.ndarray, x0: int, y0: int, cfg: DenseSiftConfig) -> np.ndarray:
    """Direct per-pixel accumulation of one descriptor (independent of the
    vectorized implementation): explicit gradient, trilinear votes, Gaussian
    window, then normalize/clip/renormalize."""
    g = gray.astype(np.float64) / 255.0
    h, w = g.shape
    p = cfg.patch_size
    nb, no = cfg.spatial_bins, cfg.orientations
    sigma = p / 2.0
    hist = np.zeros((nb, nb, no))
    for v in range(p):
        for u in range(p):
            yy, xx = y0 + v, x0 + u
            # central differences with one-sided edges (np.gradient convention)
            if 0 < xx < w - 1:
                gx = (g[yy, xx + 1] - g[yy, xx - 1]) / 2.0
            elif xx == 0:
                gx = g[yy, 1] - g[yy, 0]
            else:
                gx = g[yy, w - 1] - g[yy, w - 2]
            if 0 < yy < h - 1:
                gy = (g[yy + 1, xx] - g[yy - 1, xx]) / 2.0
            elif yy == 0:
                gy = g[1, xx] - g[0, xx]
            else:
                gy = g[h - 1, xx] - g[h - 2, xx]
            mag = np.hypot(gx, gy)
            if mag == 0.0:
                continue
            theta = np.arctan2(gy, gx)
            t = theta / (2 * np.pi / no) - 0.5
            k0 = int(np.floor(t)) % no
            wk1 = t - np.floor(t)
            gauss = np.exp(-((u - (p - 1) / 2) ** 2 + (v - (p - 1) / 2) ** 2)
                           / (2 * sigma ** 2))
            for b_y in range(nb):
                cy = (b_y + 0.5) * cfg.bin_size - 0.5
                wy = max(0.0, 1.0 - abs(v - cy) / cfg.bin_size)
                if wy == 0.0:
                    continue
                for b_x in range(nb):
                    cx = (b_x + 0.5) * cfg.bin_size - 0.5
                    wx = max(0.0, 1.0 - abs(u - cx) / cfg.bin_size)
                    if wx == 0.0:
                        continue
                    hist[b_y, b_x, k0] += mag * gauss * wy * wx * (1 - wk1)
                    hist[b_y, b_x, (k0 + 1) % no] += mag * gauss * wy * wx * wk1
    vec = hist.reshape(-1)
    n = np.linalg.norm(vec)
    if n > 1e-12:
        vec = vec / n
    vec = np.clip(vec, 0, 0.2)
    n = np.linalg.norm(vec)
    if n > 1e-12:
        vec = vec / n
    return vec


class TestDenseSift:
    def test_constant_image_all_zero(self):
        out = dense_sift(Image(np.full((64, 64), 99, np.uint8)))
        assert len(out) == 81
        assert np.all(out.descriptors == 0)

    def test_grid_count(self):
        out = dense_sift(Image(np.random.default_rng(0).integers(
            0, 256, (128, 128), dtype=np.uint8)))
        assert len(out) == 625  # ((128-32)//4 + 1)^2
        assert out.dim == 128

    def test_step_edge_matches_naive_oracle(self):
        img = np.zeros((48, 48), np.uint8)
        img[24:, :] = 255  # horizontal step edge
        cfg = DenseSiftConfig()
        out = dense_sift(Image(img), cfg)
        # compare one interior descriptor against the reference accumulation
        idx = np.where((out.positions[:, 0] == 24) & (out.positions[:, 1] == 24))[0][0]
        got = out.descriptors[idx].astype(np.float64)
        want = _sift_oracle_patch(img, 24 - cfg.patch_size // 2,
                                  24 - cfg.patch_size // 2, cfg)
        np.testing.assert_allclose(got, want, atol=1e-6)
        # gradient is vertical (90 deg): mass sits in the two adjacent
        # orientation bins, split evenly
        per_orient = got.reshape(16, 8).sum(axis=0)
        assert per_orient[1] + per_orient[2] == pytest.approx(per_orient.sum(), rel=1e-9)
        assert per_orient[1] == pytest.approx(per_orient[2], rel=1e-9)

    def test_random_image_matches_naive_oracle(self):
        rng = np.random.default_rng(11)
        img = rng.integers(0, 256, (40, 44), dtype=np.uint8)
        cfg = DenseSiftConfig()
        out = dense_sift(Image(img), cfg)
        for idx in (0, len(out) // 2, len(out) - 1):
            cx, cy = out.positions[idx]
            want = _sift_oracle_patch(img, int(cx) - 16, int(cy) - 16, cfg)
            np.testing.assert_allclose(out.descriptors[idx].astype(np.float64),
                                       want, atol=1e-6)

    def test_norm_invariant(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        out = dense_sift(Image(img))
        norms = np.linalg.norm(out.descriptors, axis=1)
        assert np.all((norms < 1e-6) | (np.abs(norms - 1.0) < 1e-5))

    def test_clip_bound_pre_renormalization(self):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        out = dense_sift(Image(img))
        assert np.all(out.descriptors >= 0)
        # after renormalization values may exceed 0.2 only by the renorm factor
        assert np.all(out.descriptors <= 0.2 / 0.2 + 1e-6)

    def test_translation_covariance(self):
        rng = np.random.default_rng(3)
        base = rng.integers(0, 256, (80, 80), dtype=np.uint8)
        cfg = DenseSiftConfig(step=4)
        a = dense_sift(Image(base[:, :76].copy()), cfg)
        b = dense_sift(Image(base[:, 4:].copy()), cfg)
        # site (x+4, y) of the unshifted crop equals site (x, y) of the shifted one
        na = a.descriptors.reshape(len(a), -1)
        pos_a = {tuple(p): i for i, p in enumerate(a.positions)}
        checked = 0
        for j, (x, y) in enumerate(b.positions):
            key = (x + 4, y)
            if key in pos_a and 20 <= x < 56 and 20 <= y < 60:
                np.testing.assert_allclose(na[pos_a[key]], b.descriptors[j],
                                           atol=1e-6)
                checked += 1
        assert checked > 10

    def test_too_small_image_rejected(self):
        with pytest.raises(ValueError):
            dense_sift(Image(np.zeros((16, 64), np.uint8)))


def _cov_eig_oracle(X: np.ndarray):
    """Brute-force eigensolver on the explicit covariance matrix."""
    mu = X.mean(axis=0)
    Xc = X - mu
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    w, v = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


class TestPca:
    def test_line_through_origin(self):
        t = np.linspace(-2, 2, 50)
        d = np.array([1.0, 2.0, -1.0])
        d /= np.linalg.norm(d)
        X = t[:, None] * d[None, :]
        m = PcaReducer(n_components=1).fit(X)
        assert abs(abs(m.components_[0] @ d) - 1.0) < 1e-9
        assert m.eigenvalues_[0] == pytest.approx(np.var(t, ddof=1), rel=1e-9)

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 6))
        m = PcaReducer(n_components=6).fit(X)
        Z = m.transform(X)
        np.testing.assert_allclose(m.inverse_transform(Z), X, atol=1e-8)

    def test_reconstruction_error_equals_discarded_eigenvalues(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 10)) @ rng.normal(size=(10, 10))
        m = PcaReducer(n_components=4).fit(X)
        Z = m.transform(X)
        R = m.inverse_transform(Z)
        err = np.sum((X - R) ** 2) / (X.shape[0] - 1)
        w_all, v_all = _cov_eig_oracle(X)
        assert err == pytest.approx(w_all[4:].sum(), abs=1e-6)
        # implementation eigenvalues match the brute-force ones
        np.testing.assert_allclose(m.eigenvalues_, w_all[:4], atol=1e-6)
        # and the spanned subspaces agree
        for k in range(4):
            assert abs(abs(m.components_[k] @ v_all[:, k]) - 1.0) < 1e-6

    def test_sign_convention(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 5))
        m = PcaReducer(n_components=3).fit(X)
        for c in m.components_:
            assert c[np.abs(c).argmax()] > 0

    def test_projecting_mean_gives_zero(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(20, 4)) + 3.0
        m = PcaReducer(n_components=2).fit(X)
        np.testing.assert_allclose(m.transform(m.mean_[None, :]), 0.0, atol=1e-9)

    def test_basis_column_projects_one_hot(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(25, 6))
        m = PcaReducer(n_components=3).fit(X)
        for k in range(3):
            row = m.transform((m.mean_ + m.components_[k])[None, :])[0]
            want = np.zeros(3)
            want[k] = 1.0
            np.testing.assert_allclose(row, want, atol=1e-8)

    def test_projected_training_mean_zero(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(60, 8)) * 4 + 1
        m = PcaReducer(n_components=5).fit(X)
        np.testing.assert_allclose(m.transform(X).mean(axis=0), 0.0, atol=1e-6)

    def test_eigenvalue_sum_bounded_by_total_variance(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 7))
        m = PcaReducer(n_components=4).fit(X)
        total = np.var(X, axis=0, ddof=1).sum()
        assert m.eigenvalues_.sum() <= total + 1e-6

    def test_rank_deficient_error_and_reduce(self):
        rng = np.random.default_rng(12)
        base = rng.normal(size=(30, 2))
        X = base @ rng.normal(size=(2, 8))  # rank 2
        with pytest.raises(ValueError):
            PcaReducer(n_components=5).fit(X)
        m = PcaReducer(n_components=5, on_rank_deficient="reduce").fit(X)
        assert m.components_.shape[0] == 2

    def test_d_out_of_range(self):
        X = np.random.default_rng(13).normal(size=(10, 4))
        with pytest.raises(ValueError):
            PcaReducer(n_components=0).fit(X)
        with pytest.raises(ValueError):
            PcaReducer(n_components=10).fit(X)

    def test_orthonormal_within_tolerance(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(50, 9))
        m = PcaReducer(n_components=6).fit(X)
        G = m.components_ @ m.components_.T
        np.testing.assert_allclose(G, np.eye(6), atol=1e-6)
