import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from docauth.errors import DegenerateInputError
from docauth.imaging import (
    Image,
    QualityThresholds,
    decode_image,
    encode_jpeg,
    encode_png,
    ncc_align,
    quality_gate,
    resize,
    to_grayscale,
)


def _bilinear_oracle(src: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Brute-force per-pixel bilinear evaluation (half-pixel centers)."""
    h, w = src.shape[:2]
    out = np.zeros((new_h, new_w), dtype=np.float64)
    for j in range(new_h):
        for i in range(new_w):
            x = min(max((i + 0.5) * w / new_w - 0.5, 0.0), w - 1.0)
            y = min(max((j + 0.5) * h / new_h - 0.5, 0.0), h - 1.0)
            x0, y0 = int(np.floor(x)), int(np.floor(y))
            x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
            fx, fy = x - x0, y - y0
            out[j, i] = (src[y0, x0] * (1 - fx) * (1 - fy)
                         + src[y0, x1] * fx * (1 - fy)
                         + src[y1, x0] * (1 - fx) * fy
                         + src[y1, x1] * fx * fy)
    return out


class TestResize:
    def test_constant_image_downscale(self):
        img = Image(np.full((100, 100), 128, np.uint8))
        out = resize(img, 15, 15)
        assert out.width == 15 and out.height == 15
        assert np.all(out.data == 128)

    def test_identity_resize_is_bytewise_equal(self):
        rng = np.random.default_rng(0)
        img = Image(rng.integers(0, 256, (37, 23, 3), dtype=np.uint8))
        out = resize(img, 23, 37)
        assert np.array_equal(out.data, img.data)

    def test_checkerboard_halving_matches_block_means(self):
        src = np.zeros((4, 4), np.uint8)
        src[::2, 1::2] = 255
        src[1::2, ::2] = 255
        out = resize(Image(src), 2, 2)
        expected = _bilinear_oracle(src.astype(np.float64), 2, 2)
        assert np.all(np.abs(out.data.astype(np.float64) - expected) <= 1.0)
        # each output pixel is the mean of its 2x2 block
        for j in range(2):
            for i in range(2):
                block_mean = src[2 * j:2 * j + 2, 2 * i:2 * i + 2].mean()
                assert abs(float(out.data[j, i]) - block_mean) <= 1.0

    def test_matches_bruteforce_bilinear(self):
        rng = np.random.default_rng(7)
        src = rng.integers(0, 256, (11, 17), dtype=np.uint8)
        out = resize(Image(src), 9, 6)
        expected = _bilinear_oracle(src.astype(np.float64), 9, 6)
        assert np.all(np.abs(out.data.astype(np.float64) - expected) <= 0.5 + 1e-9)

    def test_zero_target_rejected(self):
        img = Image(np.zeros((4, 4), np.uint8))
        with pytest.raises(ValueError):
            resize(img, 0, 4)
        with pytest.raises(ValueError):
            resize(img, 4, 0)

    def test_roundtrip_constant_exact(self):
        img = Image(np.full((40, 30), 77, np.uint8), dpi=600)
        down = resize(img, 10, 13)
        back = resize(down, 30, 40)
        assert np.array_equal(back.data, img.data)

    def test_dpi_rescaled(self):
        img = Image(np.zeros((20, 20), np.uint8), dpi=600)
        assert resize(img, 10, 10).dpi == pytest.approx(300)


class TestGrayscale:
    def test_white(self):
        img = Image(np.full((2, 2, 3), 255, np.uint8))
        assert np.all(to_grayscale(img).data == 255)

    def test_pure_red_rounds_to_76(self):
        a = np.zeros((1, 1, 3), np.uint8)
        a[0, 0, 0] = 255
        assert to_grayscale(Image(a)).data[0, 0] == 76  # 0.299*255 = 76.245

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        img = Image(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8))
        once = to_grayscale(img)
        twice = to_grayscale(once)
        assert twice is once


def _ncc_oracle(ref: np.ndarray, prb: np.ndarray, radius: int):
    """Exhaustive Pearson NCC over the offset window (independent loop impl)."""
    rh, rw = ref.shape
    ph, pw = prb.shape
    by, bx = (ph - rh) // 2, (pw - rw) // 2
    best = None
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            py0, px0 = by + dy, bx + dx
            ry0, rx0 = max(0, -py0), max(0, -px0)
            py0, px0 = max(0, py0), max(0, px0)
            h = min(rh - ry0, ph - py0)
            w = min(rw - rx0, pw - px0)
            if h <= 0 or w <= 0 or h * w < max(1, 0.25 * rh * rw):
                continue
            a = ref[ry0:ry0 + h, rx0:rx0 + w].astype(np.float64)
            b = prb[py0:py0 + h, px0:px0 + w].astype(np.float64)
            a -= a.mean()
            b -= b.mean()
            d = np.sqrt((a * a).sum() * (b * b).sum())
            if d == 0:
                continue
            c = (a * b).sum() / d
            key = (-c, abs(dx) + abs(dy), dy, dx)
            if best is None or key < best[0]:
                best = (key, dx, dy, c)
    return best[1], best[2], best[3]


class TestNccAlign:
    def test_self_alignment(self):
        rng = np.random.default_rng(2)
        ref = Image(rng.integers(0, 256, (48, 48), dtype=np.uint8))
        off = ncc_align(ref, ref, radius=5)
        assert (off.dx, off.dy) == (0, 0)
        assert off.peak_correlation == pytest.approx(1.0, abs=1e-9)

    def test_known_translation_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        big = rng.integers(0, 256, (80, 80), dtype=np.uint8)
        ref = big[10:58, 10:58]
        dx, dy = 3, -2
        prb = big[10 - dy:58 - dy, 10 - dx:58 - dx]
        off = ncc_align(Image(ref.copy()), Image(prb.copy()), radius=5)
        assert (off.dx, off.dy) == (3, -2)
        odx, ody, ocorr = _ncc_oracle(ref, prb, 5)
        assert (off.dx, off.dy) == (odx, ody)
        assert off.peak_correlation == pytest.approx(ocorr, abs=1e-12)

    def test_constant_reference_degenerate(self):
        ref = Image(np.full((32, 32), 9, np.uint8))
        prb = Image(np.zeros((32, 32), np.uint8))
        with pytest.raises(DegenerateInputError):
            ncc_align(ref, prb, radius=3)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(-6, 6), st.integers(-6, 6), st.integers(0, 2 ** 31 - 1))
    def test_translation_recovery_property(self, dx, dy, seed):
        rng = np.random.default_rng(seed)
        big = rng.integers(0, 256, (76, 76), dtype=np.uint8)
        ref = big[10:58, 10:58]
        prb = big[10 - dy:58 - dy, 10 - dx:58 - dx]
        off = ncc_align(Image(ref.copy()), Image(prb.copy()), radius=6)
        assert (off.dx, off.dy) == (dx, dy)
        assert off.peak_correlation == pytest.approx(1.0, abs=1e-9)


def _laplacian_variance_oracle(gray: np.ndarray) -> float:
    h, w = gray.shape
    vals = []
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            vals.append(gray[y - 1, x] + gray[y + 1, x] + gray[y, x - 1]
                        + gray[y, x + 1] - 4.0 * gray[y, x])
    return float(np.var(vals))


class TestQualityGate:
    def test_constant_image_fails_blur(self):
        rep = quality_gate(Image(np.full((30, 30), 128, np.uint8)))
        assert rep.blur_score == 0.0
        assert not rep.passed

    def test_all_white_fails_highlights(self):
        rep = quality_gate(Image(np.full((30, 30), 255, np.uint8)))
        assert rep.highlight_fraction == 1.0
        assert not rep.passed

    def test_sharp_beats_blurred(self):
        tile = np.zeros((40, 40), np.uint8)
        tile[::2, :] = 255
        sharp = tile.astype(np.float64)
        # 5x5 box blur with edge replication
        pad = np.pad(sharp, 2, mode="edge")
        blurred = np.zeros_like(sharp)
        for y in range(40):
            for x in range(40):
                blurred[y, x] = pad[y:y + 5, x:x + 5].mean()
        rep_s = quality_gate(Image(tile))
        rep_b = quality_gate(Image(np.floor(blurred + 0.5).astype(np.uint8)))
        assert rep_s.blur_score > rep_b.blur_score
        # blur score agrees with the direct Laplacian computation
        assert rep_s.blur_score == pytest.approx(_laplacian_variance_oracle(sharp), rel=1e-9)

    def test_thresholds_configurable(self):
        rng = np.random.default_rng(4)
        img = Image(rng.integers(0, 200, (20, 20), dtype=np.uint8))
        assert quality_gate(img, QualityThresholds(min_blur_score=0.0)).passed


class TestCodecs:
    def test_png_roundtrip_with_dpi(self):
        rng = np.random.default_rng(5)
        img = Image(rng.integers(0, 256, (9, 7, 3), dtype=np.uint8), dpi=600)
        back = decode_image(encode_png(img))
        assert np.array_equal(back.data, img.data)
        assert back.dpi == pytest.approx(600, abs=1)

    def test_jpeg_decodes(self):
        img = Image(np.full((16, 16, 3), 127, np.uint8))
        back = decode_image(encode_jpeg(img, quality=95))
        assert back.data.shape == (16, 16, 3)
        assert abs(int(back.data.mean()) - 127) <= 2

    def test_caller_dpi_when_metadata_absent(self):
        img = Image(np.zeros((4, 4), np.uint8))
        raw = encode_png(img)
        assert decode_image(raw, dpi=400).dpi == 400
