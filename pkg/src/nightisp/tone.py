"""Global and local tone, contrast, saturation and sharpening operators.

All operators map [0, 1] images into [0, 1] and preserve finiteness.
Identity parameterizations (beta=1, strength=1, amount=0, factor=1,
knots all 1) return the input untouched, bit-exactly.

Hue convention: where an operator takes a hue window, hue is the chroma
angle in the BT.601 Cb/Cr plane, in degrees [0, 360). Anchor angles for
the primaries are exposed as ``chroma_hue_deg``: red is near 109, green
near 232, blue near 351, magenta/purple near 52. Saturation and hue
edits scale or rotate the chroma vector at fixed luma, so luma is
preserved exactly (up to the gamut fit).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .color import _CB_SCALE, _CR_SCALE, _LUMA, luma601
from .errors import KnotError
from .mosaic import ImageF


@dataclass(frozen=True)
class ToneParams:
    """Parameter bundle for the conditional and preset-driven operators."""

    beta: float = 1.0
    s_center: float = 0.0
    s_strength: float = 1.0
    p_lo: float = 1.0
    p_hi: float = 99.0
    alpha: float = 0.25
    grid: tuple[int, int] = (1, 1)
    unsharp_radius: float = 2.0
    unsharp_amount: float = 0.8
    unsharp_threshold: float = 0.01
    gamma: float = 0.7
    saturation: float = 1.0
    autocontrast_cutoff: float = 0.0

    def __post_init__(self):
        values = [
            self.beta, self.s_center, self.s_strength, self.p_lo, self.p_hi, self.alpha,
            self.unsharp_radius, self.unsharp_amount, self.unsharp_threshold, self.gamma,
            self.saturation, self.autocontrast_cutoff,
        ]
        if not all(np.isfinite(v) for v in values):
            raise ValueError("tone parameters must be finite")
        if not (0 <= self.p_lo < self.p_hi <= 100):
            raise ValueError(f"need 0 <= p_lo < p_hi <= 100, got ({self.p_lo}, {self.p_hi})")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.grid}")


def local_contrast_correction(img: ImageF, mask_sigma: float) -> ImageF:
    """Per-pixel gamma from a blurred inverted-luma mask.

    The exponent is 2^((0.5 - m) / 0.5) with m the Gaussian-blurred
    (1 - luma): dark surroundings (m > 0.5) brighten, bright ones darken,
    and a mid-gray neighborhood leaves the pixel unchanged.
    """
    if mask_sigma <= 0:
        raise ValueError(f"mask_sigma must be > 0, got {mask_sigma}")
    m = gaussian_filter(1.0 - luma601(img.data), sigma=mask_sigma, mode="mirror")
    exponent = np.exp2(1.0 - 2.0 * m)
    return img.with_data(np.power(img.data, exponent[:, :, None]))


def mean_contrast_stretch(img: ImageF, beta: float) -> ImageF:
    """Stretch values around each channel's mean by a factor beta."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 1.0:
        return img
    means = img.data.reshape(-1, 3).mean(axis=0)
    return img.with_data(np.clip(means + beta * (img.data - means), 0.0, 1.0))


def s_curve(img: ImageF, center: float, strength: float) -> ImageF:
    """Piecewise power curve around ``center``, continuous and monotone.

    Below the center the curve is c - c*((c - x)/c)^strength, above it
    the mirrored highlight branch; with the center at zero it degenerates
    to the plain gamma x^strength. strength < 1 raises contrast around
    the center, strength > 1 lowers it.
    """
    if strength <= 0:
        raise ValueError(f"strength must be > 0, got {strength}")
    if not (0.0 <= center <= 1.0):
        raise ValueError(f"center must be in [0, 1], got {center}")
    if strength == 1.0:
        return img
    return img.with_data(_s_curve_values(img.data, center, strength))


def _s_curve_values(x: np.ndarray, c: float, g: float) -> np.ndarray:
    if c == 0.0:
        return np.power(x, g)
    if c == 1.0:
        return 1.0 - np.power(1.0 - x, g)
    below = c - c * np.power(np.clip((c - x) / c, 0.0, 1.0), g)
    above = c + (1.0 - c) * np.power(np.clip((x - c) / (1.0 - c), 0.0, 1.0), g)
    return np.where(x <= c, below, above)


def histogram_stretch(img: ImageF, p_lo: float, p_hi: float) -> ImageF:
    """Map the p_lo..p_hi percentile range of each channel to [0, 1]."""
    if not (0 <= p_lo < p_hi <= 100):
        raise ValueError(f"need 0 <= p_lo < p_hi <= 100, got ({p_lo}, {p_hi})")
    out = np.empty_like(img.data)
    for ch in range(3):
        plane = img.data[:, :, ch]
        lo, hi = np.percentile(plane, [p_lo, p_hi])
        if hi <= lo:
            out[:, :, ch] = plane  # degenerate channel: leave untouched
        else:
            out[:, :, ch] = np.clip((plane - lo) / (hi - lo), 0.0, 1.0)
    return img.with_data(out)


def conditional_contrast(
    img: ImageF, dark_thresh: float, bright_thresh: float, params: ToneParams
) -> ImageF:
    """Brighten very dark images, darken very bright ones, else pass through.

    A mean luma below dark_thresh applies the gamma params.gamma
    (expected < 1); above bright_thresh applies the darkening S-curve
    (params.s_center, params.s_strength, expected > 1). In between the
    input is returned bit-identically.
    """
    if not dark_thresh < bright_thresh:
        raise ValueError("need dark_thresh < bright_thresh")
    mean_luma = float(luma601(img.data).mean())
    if mean_luma < dark_thresh:
        return img.with_data(np.power(img.data, params.gamma))
    if mean_luma > bright_thresh:
        return s_curve(img, params.s_center, params.s_strength)
    return img


def _naka_curve(x: np.ndarray, alpha) -> np.ndarray:
    # raw response x/(x+alpha), normalized so the curve maps 1 to 1
    return np.clip(x / (x + alpha) * (1.0 + alpha), 0.0, 1.0)


def naka_rushton(img: ImageF, alpha: float) -> ImageF:
    """Compressive response x/(x+alpha), rescaled to fix the white point."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    return img.with_data(_naka_curve(img.data, alpha))


def geometric_mean_luma(img: ImageF, eps: float = 1e-6) -> float:
    """Epsilon-stabilized geometric mean of the luma plane."""
    return float(np.exp(np.mean(np.log(luma601(img.data) + eps))))


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    return np.linspace(0, n, tiles + 1).round().astype(np.intp)


def _interp_axis(pos: np.ndarray, centers: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Linear interpolation with constant extrapolation along axis 0 of values."""
    if centers.size == 1:
        return np.repeat(values, pos.size, axis=0)
    idx = np.clip(np.searchsorted(centers, pos), 1, centers.size - 1)
    t = (pos - centers[idx - 1]) / (centers[idx] - centers[idx - 1])
    t = np.clip(t, 0.0, 1.0).reshape((-1,) + (1,) * (values.ndim - 1))
    return values[idx - 1] * (1.0 - t) + values[idx] * t


def nite_tonemap(img: ImageF, grid: tuple[int, int], alpha_scale: float) -> ImageF:
    """Locally adaptive compressive tone mapping.

    The adaptation level alpha is alpha_scale times the geometric-mean
    luminance of each tile, interpolated bilinearly between tile centers;
    a 1x1 grid reduces bit-exactly to the global operator at the image's
    geometric-mean key.
    """
    if alpha_scale <= 0:
        raise ValueError(f"alpha_scale must be > 0, got {alpha_scale}")
    nx, ny = int(grid[0]), int(grid[1])
    if nx < 1 or ny < 1:
        raise ValueError(f"grid must be at least 1x1, got {grid}")
    y = luma601(img.data)
    h, w = y.shape
    ye, xe = _tile_edges(h, ny), _tile_edges(w, nx)
    alpha_grid = np.empty((ny, nx), dtype=np.float64)
    for ty in range(ny):
        for tx in range(nx):
            tile = y[ye[ty] : ye[ty + 1], xe[tx] : xe[tx + 1]]
            alpha_grid[ty, tx] = alpha_scale * np.exp(np.mean(np.log(tile + 1e-6)))
    row_centers = (ye[:-1] + ye[1:] - 1) / 2.0
    col_centers = (xe[:-1] + xe[1:] - 1) / 2.0
    by_row = _interp_axis(np.arange(h, dtype=np.float64), row_centers, alpha_grid)
    alpha_px = _interp_axis(np.arange(w, dtype=np.float64), col_centers, by_row.T).T
    return img.with_data(_naka_curve(img.data, alpha_px[:, :, None]))


def unsharp_mask(img: ImageF, radius: float, amount: float, threshold: float = 0.0) -> ImageF:
    """Add back thresholded high-pass detail: in + amount * (in - blur)."""
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    if amount < 0:
        raise ValueError(f"amount must be >= 0, got {amount}")
    if amount == 0.0:
        return img
    blurred = np.stack(
        [gaussian_filter(img.data[:, :, c], sigma=radius, mode="mirror") for c in range(3)],
        axis=2,
    )
    detail = img.data - blurred
    detail = np.where(np.abs(detail) > threshold, detail, 0.0)
    return img.with_data(np.clip(img.data + amount * detail, 0.0, 1.0))


def autocontrast(img: ImageF, cutoff_pct: float) -> ImageF:
    """Discard cutoff_pct% of mass at both histogram ends and stretch."""
    if not (0 <= cutoff_pct < 50):
        raise ValueError(f"cutoff_pct must be in [0, 50), got {cutoff_pct}")
    return histogram_stretch(img, cutoff_pct, 100.0 - cutoff_pct)


def _to_chroma(data: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = luma601(data)
    cb = (data[:, :, 2] - y) / _CB_SCALE
    cr = (data[:, :, 0] - y) / _CR_SCALE
    return y, cb, cr


def _from_chroma(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    r = y + _CR_SCALE * cr
    b = y + _CB_SCALE * cb
    g = (y - _LUMA[0] * r - _LUMA[2] * b) / _LUMA[1]
    return np.stack([r, g, b], axis=2)


def _fit_gamut(y: np.ndarray, rgb: np.ndarray) -> np.ndarray:
    """Scale each pixel's chroma toward its luma gray until it fits [0, 1].

    Moves along the constant-luma ray, so luma is untouched.
    """
    gray = y[:, :, None]
    delta = rgb - gray
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi = np.where(delta > 0, (1.0 - gray) / delta, np.inf)
        t_lo = np.where(delta < 0, -gray / delta, np.inf)
    t = np.clip(np.minimum(t_hi, t_lo).min(axis=2), 0.0, 1.0)
    return gray + t[:, :, None] * delta


def _hue_deg(cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    return np.degrees(np.arctan2(cr, cb)) % 360.0


def chroma_hue_deg(rgb: Sequence[float]) -> float:
    """Chroma-plane hue angle of an RGB color, for building hue windows."""
    data = np.asarray(rgb, dtype=np.float64).reshape(1, 1, 3)
    _, cb, cr = _to_chroma(data)
    return float(_hue_deg(cb, cr)[0, 0])


def _in_window(hue: np.ndarray, lo: float, hi: float) -> np.ndarray:
    lo, hi = lo % 360.0, hi % 360.0
    if lo <= hi:
        return (hue >= lo) & (hue <= hi)
    return (hue >= lo) | (hue <= hi)


def saturation_adjust(
    img: ImageF, factor: float, hue_window: tuple[float, float] | None = None
) -> ImageF:
    """Scale chroma by ``factor`` at constant luma and hue.

    With a hue window only pixels whose chroma angle falls inside it are
    touched (bit-identical elsewhere); factor 0 collapses to the luma
    gray axis.
    """
    if factor < 0:
        raise ValueError(f"factor must be >= 0, got {factor}")
    if factor == 1.0:
        return img
    y, cb, cr = _to_chroma(img.data)
    if hue_window is None:
        mask = np.ones(y.shape, dtype=bool)
    else:
        mask = _in_window(_hue_deg(cb, cr), *hue_window)
    scaled = _from_chroma(y, cb * factor, cr * factor)
    if factor > 1.0:
        scaled = _fit_gamut(y, scaled)
    out = img.data.copy()
    out[mask] = scaled[mask]
    return img.with_data(np.clip(out, 0.0, 1.0))


@dataclass(frozen=True)
class MemoryColorPrototype:
    """A hue window pulled toward a target hue with a saturation gain."""

    hue_lo: float
    hue_hi: float
    target_hue: float
    sat_gain: float = 1.0
    feather: float = 10.0  # degrees of linear falloff inside each window edge

    def __post_init__(self):
        if self.sat_gain < 0 or self.feather < 0:
            raise ValueError("sat_gain and feather must be >= 0")


def _window_width(lo: float, hi: float) -> float:
    return (hi - lo) % 360.0 or 360.0


def memory_color_enhance(img: ImageF, prototypes: Sequence[MemoryColorPrototype]) -> ImageF:
    """Pull chroma angles toward preferred memory hues inside hue windows.

    Window membership weights fall off linearly over each prototype's
    feather, so the output is continuous in the input hue; achromatic
    pixels carry zero chroma and pass through unchanged. Windows must be
    disjoint.
    """
    if not prototypes:
        return img
    for i, a in enumerate(prototypes):
        for b in prototypes[i + 1 :]:
            mid = [(a.hue_lo + t * _window_width(a.hue_lo, a.hue_hi)) % 360 for t in (0, 0.5, 1)]
            if any(_in_window(np.array([m]), b.hue_lo, b.hue_hi)[0] for m in mid):
                raise ValueError("memory color hue windows must be disjoint")
    y, cb, cr = _to_chroma(img.data)
    hue = _hue_deg(cb, cr)
    mag = np.hypot(cb, cr)
    new_hue = hue.copy()
    new_mag = mag.copy()
    touched = np.zeros(hue.shape, dtype=bool)
    for proto in prototypes:
        width = _window_width(proto.hue_lo, proto.hue_hi)
        inside = _in_window(hue, proto.hue_lo, proto.hue_hi)
        d_lo = (hue - proto.hue_lo) % 360.0
        d_hi = (proto.hue_hi - hue) % 360.0
        feather = min(proto.feather, width / 2.0)
        if feather > 0:
            weight = np.clip(np.minimum(d_lo, d_hi) / feather, 0.0, 1.0)
        else:
            weight = np.ones_like(hue)
        weight = np.where(inside, weight, 0.0)
        delta = (proto.target_hue - hue + 180.0) % 360.0 - 180.0
        new_hue = np.where(inside, hue + weight * delta, new_hue)
        new_mag = np.where(inside, mag * (1.0 + weight * (proto.sat_gain - 1.0)), new_mag)
        touched |= inside & (weight > 0.0) & (mag > 0.0)
    rad = np.radians(new_hue)
    rebuilt = _fit_gamut(y, _from_chroma(y, new_mag * np.cos(rad), new_mag * np.sin(rad)))
    out = img.data.copy()
    out[touched] = rebuilt[touched]
    return img.with_data(np.clip(out, 0.0, 1.0))


def piecewise_gamma(img: ImageF, knots: Sequence[tuple[float, float]]) -> ImageF:
    """Apply a luma-dependent gamma interpolated between (luma, gamma) knots.

    A single knot reduces to the plain power curve; knots must be sorted
    by strictly increasing luma in [0, 1] with positive gammas.
    """
    if not knots:
        raise KnotError("need at least one knot")
    xs = np.array([k[0] for k in knots], dtype=np.float64)
    gs = np.array([k[1] for k in knots], dtype=np.float64)
    if np.any(xs < 0) or np.any(xs > 1):
        raise KnotError(f"knot positions must lie in [0, 1], got {xs}")
    if np.any(np.diff(xs) <= 0):
        raise KnotError(f"knot positions must be strictly increasing, got {xs}")
    if np.any(gs <= 0) or not np.all(np.isfinite(gs)):
        raise KnotError(f"knot gammas must be positive and finite, got {gs}")
    if np.all(gs == 1.0):
        return img
    if len(knots) == 1:
        return img.with_data(np.power(img.data, gs[0]))
    gamma_px = np.interp(luma601(img.data), xs, gs)
    return img.with_data(np.power(img.data, gamma_px[:, :, None]))
