"""Noise estimation and the classical denoisers used by the submissions.

Non-local means with asymmetric luma/chroma strength, Gaussian chroma
smoothing, and ROF total-variation denoising of the luma channel. The
luma/chroma split is BT.601 full range via the color module, so the
denoisers are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, uniform_filter

from .color import luma601, rgb_ycbcr, ycbcr_rgb
from .errors import DimensionError
from .mosaic import ColorSpace, ImageF


@dataclass(frozen=True)
class NoiseEstimate:
    """Noise standard deviation in [0, 1] signal units."""

    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")


def estimate_noise_sigma(img: ImageF) -> NoiseEstimate:
    """Median-absolute-deviation estimate from the finest wavelet band.

    One-level Haar transform of the luma plane; sigma is the median of
    the absolute HH coefficients divided by 0.6745.
    """
    if min(img.height, img.width) < 2:
        raise DimensionError("noise estimation needs at least 2x2 pixels")
    y = img.data[:, :, 0] if img.space is ColorSpace.YCBCR else luma601(img.data)
    h2, w2 = y.shape[0] // 2, y.shape[1] // 2
    y = y[: 2 * h2, : 2 * w2]
    hh = 0.5 * (y[0::2, 0::2] - y[0::2, 1::2] - y[1::2, 0::2] + y[1::2, 1::2])
    return NoiseEstimate(sigma=float(np.median(np.abs(hh)) / 0.6745))


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    pad = max(abs(dy), abs(dx))
    if pad == 0:
        return a
    padded = np.pad(a, pad, mode="reflect")
    h, w = a.shape
    return padded[pad + dy : pad + dy + h, pad + dx : pad + dx + w]


def _nlm_plane(plane: np.ndarray, sigma: float, h: float, patch: int, window: int) -> np.ndarray:
    """Non-local means on one plane, filtering strength h.

    Patch distances are noise-compensated (d^2 - 2 sigma^2, floored at 0)
    as in the reference formulation. Pure and deterministic; the offset
    loop is trivially tile-parallel.
    """
    half = window // 2
    num = np.zeros_like(plane)
    den = np.zeros_like(plane)
    two_s2 = 2.0 * sigma * sigma
    h2 = h * h
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            shifted = _shift(plane, dy, dx)
            d2 = uniform_filter((plane - shifted) ** 2, size=patch, mode="mirror")
            w = np.exp(-np.maximum(d2 - two_s2, 0.0) / h2)
            num += w * shifted
            den += w
    return num / den


def nlm_denoise(
    img: ImageF,
    sigma: NoiseEstimate,
    k_luma: float = 0.6,
    k_chroma: float = 1.2,
    patch: int = 7,
    window: int = 21,
) -> ImageF:
    """Non-local means, stronger on the color channels than on luma.

    Filtering strength is h = k * sigma per plane (k_luma on Y, k_chroma
    on Cb/Cr); a zero strength leaves that plane untouched. Non-YCbCr
    images are converted internally and returned in their input space.
    """
    if not (k_chroma >= k_luma >= 0):
        raise ValueError("need k_chroma >= k_luma >= 0")
    if patch % 2 == 0 or window % 2 == 0 or patch < 1 or window < 1:
        raise ValueError("patch and window must be odd and positive")
    if sigma.sigma == 0.0:
        return img
    source_space = img.space
    ycc = img if source_space is ColorSpace.YCBCR else rgb_ycbcr(img)
    out = ycc.data.copy()
    for ch, k in ((0, k_luma), (1, k_chroma), (2, k_chroma)):
        if k > 0:
            out[:, :, ch] = _nlm_plane(ycc.data[:, :, ch], sigma.sigma, k * sigma.sigma, patch, window)
    result = ImageF(data=out, space=ColorSpace.YCBCR)
    if source_space is ColorSpace.YCBCR:
        return result
    back = ycbcr_rgb(result, target_space=source_space)
    return back.with_data(np.clip(back.data, 0.0, 1.0))


def gaussian_chroma(img: ImageF, sigma_px: float) -> ImageF:
    """Gaussian blur on Cb/Cr only; the luma plane is untouched bit-exactly."""
    if img.space is not ColorSpace.YCBCR:
        raise ValueError(f"expected a YCbCr image, got {img.space}")
    if sigma_px < 0:
        raise ValueError(f"sigma_px must be >= 0, got {sigma_px}")
    if sigma_px == 0:
        return img
    out = img.data.copy()
    for ch in (1, 2):
        out[:, :, ch] = gaussian_filter(img.data[:, :, ch], sigma=sigma_px, mode="mirror")
    return ImageF(data=out, space=ColorSpace.YCBCR)


def _grad(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gy = np.zeros_like(u)
    gx = np.zeros_like(u)
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    return gy, gx


def _div(py: np.ndarray, px: np.ndarray) -> np.ndarray:
    d = np.zeros_like(py)
    d[0, :] += py[0, :]
    d[1:-1, :] += py[1:-1, :] - py[:-2, :]
    d[-1, :] -= py[-2, :]
    d[:, 0] += px[:, 0]
    d[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
    d[:, -1] -= px[:, -2]
    return d


def tv_denoise_luma(img: ImageF, lam: float, iterations: int = 30) -> ImageF:
    """ROF total-variation denoising of the luma plane.

    Solved with Chambolle's dual projection for a fixed iteration budget
    (keeps the timing harness deterministic). Cb/Cr pass through
    bit-identically; lam = 0 is the identity.
    """
    if img.space is not ColorSpace.YCBCR:
        raise ValueError(f"expected a YCbCr image, got {img.space}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if lam == 0:
        return img
    f = img.data[:, :, 0]
    tau = 0.25
    py = np.zeros_like(f)
    px = np.zeros_like(f)
    for _ in range(iterations):
        gy, gx = _grad(_div(py, px) - f / lam)
        norm = 1.0 + tau * np.sqrt(gy**2 + gx**2)
        py = (py + tau * gy) / norm
        px = (px + tau * gx) / norm
    u = f - lam * _div(py, px)
    out = img.data.copy()
    out[:, :, 0] = np.clip(u, 0.0, 1.0)
    return ImageF(data=out, space=ColorSpace.YCBCR)
