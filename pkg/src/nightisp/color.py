"""Illuminant estimation, white balance and color-space conversion.

All estimators return a G-normalized camera-space illuminant. Luma and
chroma follow BT.601 full range; the XYZ -> linear sRGB matrix is the
IEC 61966-2-1 standard, shipped in the package configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateImage
from .mosaic import ColorSpace, ImageF
from .rawio import xyz_to_srgb_matrix

_LUMA = np.array([0.299, 0.587, 0.114])
_CB_SCALE = 1.772  # 2 * (1 - 0.114)
_CR_SCALE = 1.402  # 2 * (1 - 0.299)


@dataclass(frozen=True)
class Illuminant:
    """Camera-space illuminant color, normalized so the G component is 1."""

    rgb: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.rgb, dtype=np.float64)
        if v.shape != (3,) or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError(f"illuminant must be 3 positive finite values, got {v}")
        object.__setattr__(self, "rgb", v / v[1])


def gray_world(img: ImageF) -> Illuminant:
    """Estimate the illuminant as the per-channel image mean."""
    means = img.data.reshape(-1, 3).mean(axis=0)
    if np.any(means == 0.0):
        raise DegenerateImage("gray world needs nonzero channel means")
    return Illuminant(rgb=means)


def white_patch_subsampled(
    img: ImageF, samples_per_trial: int, trials: int, seed: int
) -> Illuminant:
    """White patch on random pixel subsets, averaged over trials.

    Each trial draws ``samples_per_trial`` distinct pixels (seeded PRNG)
    and takes their per-channel maximum; the estimate is the mean of the
    trial maxima, G-normalized. Deterministic for a fixed seed.
    """
    if samples_per_trial < 1 or trials < 1:
        raise ValueError("samples_per_trial and trials must be >= 1")
    flat = img.data.reshape(-1, 3)
    n = flat.shape[0]
    k = min(samples_per_trial, n)
    rng = np.random.default_rng(seed)
    maxima = np.empty((trials, 3), dtype=np.float64)
    for t in range(trials):
        idx = rng.choice(n, size=k, replace=False)
        maxima[t] = flat[idx].max(axis=0)
    estimate = maxima.mean(axis=0)
    if np.any(estimate <= 0.0):
        raise DegenerateImage("white patch estimate degenerate (all-black image?)")
    return Illuminant(rgb=estimate)


def grayness_index(
    img: ImageF,
    blur_sigma: float = 3.0,
    top_fraction: float = 0.01,
    eps: float = 1e-4,
) -> Illuminant:
    """Estimate the illuminant from the grayest pixels of a blurred copy.

    Grayness of a pixel is the magnitude of the gradients of
    (log(R/G), log(B/G)) on the blurred image; pixels with any blurred
    channel <= ``eps`` are excluded. The RGB of the ``top_fraction``
    grayest pixels (ties at the cutoff included) is averaged from the
    unblurred image and G-normalized.
    """
    if not (0.0 < top_fraction <= 1.0):
        raise ValueError(f"top_fraction must be in (0, 1], got {top_fraction}")
    blurred = np.stack(
        [gaussian_filter(img.data[:, :, c], sigma=blur_sigma, mode="mirror") for c in range(3)],
        axis=2,
    )
    valid = np.all(blurred > eps, axis=2)
    if not valid.any():
        raise DegenerateImage("no pixels above the grayness-index floor")
    safe = np.maximum(blurred, eps)
    log_rg = np.log(safe[:, :, 0] / safe[:, :, 1])
    log_bg = np.log(safe[:, :, 2] / safe[:, :, 1])
    gy_r, gx_r = np.gradient(log_rg)
    gy_b, gx_b = np.gradient(log_bg)
    gi = np.sqrt(gy_r**2 + gx_r**2 + gy_b**2 + gx_b**2)

    gi_valid = gi[valid]
    k = ceil(top_fraction * gi_valid.size)
    cutoff = np.partition(gi_valid, k - 1)[k - 1]
    selected = valid & (gi <= cutoff)
    means = img.data[selected].mean(axis=0)
    if np.any(means <= 0.0):
        raise DegenerateImage("grayest pixels have a nonpositive channel mean")
    return Illuminant(rgb=means)


def clamp_wb_diagonal(light: Illuminant, lo: float = 0.5, hi: float = 4.0) -> Illuminant:
    """Bound the applied WB diagonal's R and B gains to [lo, hi].

    Guards against green casts from sampling randomness: the correction
    applied by :func:`apply_wb` is diag(1/L_r, 1, 1/L_b), so the gains
    1/L_r and 1/L_b are clamped and the illuminant rebuilt from them.
    """
    gains = np.clip(1.0 / light.rgb, lo, hi)
    gains[1] = 1.0
    return Illuminant(rgb=1.0 / gains)


def apply_wb(img: ImageF, light: Illuminant) -> ImageF:
    """Divide out the illuminant (von Kries diagonal); may leave headroom > 1."""
    return img.with_data(img.data / light.rgb)


def camera_to_xyz(img: ImageF, cst: np.ndarray) -> ImageF:
    """Apply the camera -> XYZ matrix; negative results are clamped to 0."""
    cst = np.asarray(cst, dtype=np.float64)
    if cst.shape != (3, 3) or not np.all(np.isfinite(cst)):
        raise ValueError(f"cst must be a finite 3x3 matrix, got shape {cst.shape}")
    data = img.data @ cst.T
    return ImageF(data=np.maximum(data, 0.0), space=ColorSpace.XYZ)


def xyz_to_srgb_linear(img: ImageF) -> ImageF:
    """Standard XYZ -> linear sRGB transform; out-of-gamut negatives clamp to 0."""
    data = img.data @ xyz_to_srgb_matrix().T
    return ImageF(data=np.maximum(data, 0.0), space=ColorSpace.SRGB_LINEAR)


def encode_srgb(img: ImageF) -> ImageF:
    """Clamp to [0, 1] and apply the standard sRGB transfer curve."""
    x = np.clip(img.data, 0.0, 1.0)
    out = np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1.0 / 2.4) - 0.055)
    return ImageF(data=out, space=ColorSpace.SRGB_ENCODED)


def decode_srgb(img: ImageF) -> ImageF:
    """Inverse sRGB transfer curve back to linear values."""
    x = np.clip(img.data, 0.0, 1.0)
    out = np.where(x <= 0.04045, x / 12.92, np.power((x + 0.055) / 1.055, 2.4))
    return ImageF(data=out, space=ColorSpace.SRGB_LINEAR)


def luma601(data: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (h, w, 3) RGB array."""
    return data @ _LUMA


def rgb_ycbcr(img: ImageF) -> ImageF:
    """BT.601 full-range RGB -> YCbCr (chroma offset to 0.5)."""
    if img.space is ColorSpace.YCBCR:
        raise ValueError("image is already YCbCr")
    r, g, b = img.data[:, :, 0], img.data[:, :, 1], img.data[:, :, 2]
    y = luma601(img.data)
    cb = 0.5 + (b - y) / _CB_SCALE
    cr = 0.5 + (r - y) / _CR_SCALE
    return ImageF(data=np.stack([y, cb, cr], axis=2), space=ColorSpace.YCBCR)


def ycbcr_rgb(img: ImageF, target_space: ColorSpace = ColorSpace.SRGB_ENCODED) -> ImageF:
    """BT.601 full-range YCbCr -> RGB; round trip is identity within 1e-6."""
    if img.space is not ColorSpace.YCBCR:
        raise ValueError(f"expected a YCbCr image, got {img.space}")
    if target_space is ColorSpace.YCBCR:
        raise ValueError("target space must be an RGB space")
    y, cb, cr = img.data[:, :, 0], img.data[:, :, 1], img.data[:, :, 2]
    r = y + _CR_SCALE * (cr - 0.5)
    b = y + _CB_SCALE * (cb - 0.5)
    g = (y - _LUMA[0] * r - _LUMA[2] * b) / _LUMA[1]
    return ImageF(data=np.stack([r, g, b], axis=2), space=target_space)
