"""denoise: noise estimation, NLM, Gaussian chroma, TV luma."""

import numpy as np
import pytest

from nightisp.denoise import (
    NoiseEstimate,
    estimate_noise_sigma,
    gaussian_chroma,
    nlm_denoise,
    tv_denoise_luma,
)
from nightisp.mosaic import ColorSpace

from conftest import gray_image, image, psnr


def ramp_plus_noise(sigma: float, seed: int, h: int = 128, w: int = 128):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    clean = 0.3 + 0.4 * (xx / w)
    noisy = clean + rng.normal(0, sigma, (h, w))
    return image(np.stack([noisy] * 3, axis=2))


def blocks_scene(h: int = 96, w: int = 96) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    clean = np.zeros((h, w, 3))
    clean[..., 0] = 0.35 + 0.25 * (xx / w)
    clean[..., 1] = 0.4
    clean[..., 2] = 0.3 + 0.2 * (yy / h)
    clean[(yy // 24 + xx // 24) % 2 == 0] += np.array([0.15, 0.1, 0.05])
    return np.clip(clean, 0.05, 0.95)


def ycc_image(y: np.ndarray, cb: float = 0.5, cr: float = 0.5):
    h, w = y.shape
    return image(
        np.stack([y, np.full((h, w), cb), np.full((h, w), cr)], axis=2), ColorSpace.YCBCR
    )


class TestNoiseEstimate:
    def test_constant_image_zero_sigma(self):
        assert estimate_noise_sigma(gray_image(0.4)).sigma == 0.0

    def test_ramp_with_noise(self):
        est = estimate_noise_sigma(ramp_plus_noise(0.05, seed=0))
        assert 0.04 <= est.sigma <= 0.06

    def test_pure_noise(self):
        rng = np.random.default_rng(5)
        noise = np.clip(0.5 + rng.normal(0, 0.1, (128, 128)), 0, 1)
        est = estimate_noise_sigma(image(np.stack([noise] * 3, 2)))
        assert 0.08 <= est.sigma <= 0.12

    def test_uses_luma_of_ycbcr(self):
        rng = np.random.default_rng(2)
        y = np.clip(0.5 + rng.normal(0, 0.05, (64, 64)), 0, 1)
        est = estimate_noise_sigma(ycc_image(y))
        assert 0.04 <= est.sigma <= 0.06

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NoiseEstimate(sigma=-0.1)


class TestNlm:
    def test_zero_sigma_identity(self, rng):
        img = image(rng.random((32, 32, 3)))
        out = nlm_denoise(img, NoiseEstimate(0.0))
        assert np.array_equal(out.data, img.data)

    def test_constant_image_preserved(self):
        img = gray_image(0.41, 32, 32)
        out = nlm_denoise(img, NoiseEstimate(0.05))
        assert np.allclose(out.data, 0.41, atol=1e-9)

    def test_improves_psnr_3db(self):
        clean = blocks_scene()
        rng = np.random.default_rng(7)
        noisy = np.clip(clean + rng.normal(0, 0.05, clean.shape), 0, 1)
        img = image(noisy)
        out = nlm_denoise(img, estimate_noise_sigma(img))
        assert psnr(out.data, clean) >= psnr(noisy, clean) + 3.0

    def test_zero_k_luma_leaves_luma_untouched(self, rng):
        y = np.clip(0.5 + rng.normal(0, 0.05, (32, 32)), 0, 1)
        cb = np.clip(0.5 + rng.normal(0, 0.05, (32, 32)), 0, 1)
        img = image(np.stack([y, cb, np.full((32, 32), 0.5)], 2), ColorSpace.YCBCR)
        out = nlm_denoise(img, NoiseEstimate(0.05), k_luma=0.0, k_chroma=1.0)
        assert np.array_equal(out.data[:, :, 0], img.data[:, :, 0])
        assert not np.array_equal(out.data[:, :, 1], img.data[:, :, 1])

    def test_k_ordering_enforced(self, rng):
        img = image(rng.random((16, 16, 3)))
        with pytest.raises(ValueError):
            nlm_denoise(img, NoiseEstimate(0.05), k_luma=1.0, k_chroma=0.5)

    def test_even_patch_rejected(self, rng):
        img = image(rng.random((16, 16, 3)))
        with pytest.raises(ValueError):
            nlm_denoise(img, NoiseEstimate(0.05), patch=6)

    def test_range_preserved(self, rng):
        img = image(np.clip(rng.random((32, 32, 3)), 0, 1))
        out = nlm_denoise(img, NoiseEstimate(0.1))
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0
        assert out.space is img.space


class TestGaussianChroma:
    def test_zero_sigma_identity(self, rng):
        img = image(rng.random((16, 16, 3)), ColorSpace.YCBCR)
        out = gaussian_chroma(img, 0.0)
        assert np.array_equal(out.data, img.data)

    def test_luma_untouched_bit_exact(self, rng):
        img = image(rng.random((32, 32, 3)), ColorSpace.YCBCR)
        out = gaussian_chroma(img, 2.0)
        assert np.array_equal(out.data[:, :, 0], img.data[:, :, 0])
        assert not np.array_equal(out.data[:, :, 1], img.data[:, :, 1])

    def test_constant_chroma_unchanged(self, rng):
        y = rng.random((16, 16))
        img = ycc_image(y, cb=0.4, cr=0.6)
        out = gaussian_chroma(img, 3.0)
        assert np.allclose(out.data[:, :, 1], 0.4, atol=1e-12)
        assert np.allclose(out.data[:, :, 2], 0.6, atol=1e-12)

    def test_salt_chroma_variance_decreases(self, rng):
        y = np.full((32, 32), 0.5)
        cb = np.full((32, 32), 0.5)
        cb[rng.random((32, 32)) < 0.1] = 0.8
        img = image(np.stack([y, cb, np.full((32, 32), 0.5)], 2), ColorSpace.YCBCR)
        out = gaussian_chroma(img, 2.0)
        assert out.data[:, :, 1].var() < img.data[:, :, 1].var()

    def test_requires_ycbcr(self, rng):
        with pytest.raises(ValueError):
            gaussian_chroma(image(rng.random((8, 8, 3))), 1.0)


def total_variation(u: np.ndarray) -> float:
    return float(np.abs(np.diff(u, axis=0)).sum() + np.abs(np.diff(u, axis=1)).sum())


class TestTvDenoise:
    def test_lambda_zero_identity(self, rng):
        img = image(rng.random((16, 16, 3)), ColorSpace.YCBCR)
        out = tv_denoise_luma(img, 0.0)
        assert np.array_equal(out.data, img.data)

    def test_impulses_removed_edge_preserved(self):
        h, w = 64, 64
        yy, xx = np.mgrid[0:h, 0:w]
        step = np.where(xx >= 32, 0.7, 0.3)
        amp = 0.3
        rng = np.random.default_rng(11)
        impulses = np.zeros((h, w))
        for i in range(6, h - 6, 7):  # sparse impulses clear of the edge
            for j in range(6, w - 6, 9):
                if not 28 <= j <= 36:
                    impulses[i, j] = rng.choice([-amp, amp])
        noisy = np.clip(step + impulses, 0, 1)
        out = tv_denoise_luma(ycc_image(noisy), lam=0.15, iterations=100)
        y = out.data[:, :, 0]
        assert np.abs(y - step).max() < amp / 5
        edge_cols = np.abs(np.diff(y, axis=1)).argmax(axis=1)
        assert np.all(edge_cols == 31)  # the jump stays between columns 31 and 32

    def test_total_variation_decreases(self, rng):
        noisy = np.clip(0.5 + rng.normal(0, 0.1, (48, 48)), 0, 1)
        out = tv_denoise_luma(ycc_image(noisy), lam=0.1, iterations=30)
        assert total_variation(out.data[:, :, 0]) <= total_variation(noisy)

    def test_chroma_untouched_bit_exact(self, rng):
        img = image(rng.random((24, 24, 3)), ColorSpace.YCBCR)
        out = tv_denoise_luma(img, 0.1, 20)
        assert np.array_equal(out.data[:, :, 1:], img.data[:, :, 1:])
        assert not np.array_equal(out.data[:, :, 0], img.data[:, :, 0])

    def test_constant_preserved(self):
        img = gray_image(0.35, space=ColorSpace.YCBCR)
        out = tv_denoise_luma(img, 0.2, 30)
        assert np.allclose(out.data, img.data, atol=1e-12)

    def test_requires_ycbcr(self, rng):
        with pytest.raises(ValueError):
            tv_denoise_luma(image(rng.random((8, 8, 3))), 0.1)


class TestCrossDenoiserInvariants:
    def test_denoised_sigma_estimate_not_higher(self):
        """Estimator on denoiser output <= estimate on input (majority of seeds)."""
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            clean = blocks_scene(64, 64)
            noisy = np.clip(clean + rng.normal(0, 0.05, clean.shape), 0, 1)
            img = image(noisy)
            before = estimate_noise_sigma(img).sigma
            den = nlm_denoise(img, NoiseEstimate(0.05), window=11)
            after = estimate_noise_sigma(den).sigma
            wins += after <= before
        assert wins > 5

    def test_all_preserve_constants(self):
        img = gray_image(0.27, 24, 24, ColorSpace.YCBCR)
        assert np.allclose(gaussian_chroma(img, 1.5).data, img.data, atol=1e-12)
        assert np.allclose(tv_denoise_luma(img, 0.1, 10).data, img.data, atol=1e-12)
        assert np.allclose(nlm_denoise(img, NoiseEstimate(0.05)).data, img.data, atol=1e-9)
