"""Raw-domain geometry and reconstruction.

Level normalization, lens-shading correction, demosaicing (bilinear and
directional), box/bilinear resizing and orientation. Edge handling is
mirror reflection throughout (scipy ``mode="mirror"``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

from .errors import DimensionError
from .rawio import CfaPattern, GainMap, Orientation, RawFrame


class ColorSpace(enum.Enum):
    CAMERA_LINEAR = "camera_linear"
    XYZ = "xyz"
    SRGB_LINEAR = "srgb_linear"
    SRGB_ENCODED = "srgb_encoded"
    YCBCR = "ycbcr"


@dataclass(frozen=True)
class ImageF:
    """A 3-channel floating-point working image tagged with its color space.

    Data is (height, width, 3) float64. Values are finite; RGB-like
    spaces live in [0, headroom] with headroom >= 1 allowed until the
    final encode clamps to [0, 1].
    """

    data: np.ndarray
    space: ColorSpace

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise DimensionError(f"image data must be (h, w, 3), got {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise DimensionError(f"image too small: {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("image contains non-finite samples")
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def with_data(self, data: np.ndarray, space: ColorSpace | None = None) -> "ImageF":
        return ImageF(data=data, space=self.space if space is None else space)


@dataclass(frozen=True)
class MosaicF:
    """A floating-point Bayer plane in [0, 1] with its CFA layout."""

    plane: np.ndarray  # (height, width) float64
    cfa: CfaPattern

    def __post_init__(self):
        p = np.asarray(self.plane, dtype=np.float64)
        if p.ndim != 2:
            raise DimensionError(f"mosaic plane must be 2-D, got {p.shape}")
        if not np.all(np.isfinite(p)) or p.min() < 0:
            raise ValueError("mosaic plane must be finite and >= 0")
        object.__setattr__(self, "plane", p)

    @property
    def width(self) -> int:
        return self.plane.shape[1]

    @property
    def height(self) -> int:
        return self.plane.shape[0]


def normalize_levels(raw: RawFrame) -> MosaicF:
    """Map sensor counts to [0, 1] using the frame's black/white levels."""
    meta = raw.meta
    scale = float(meta.white_level - meta.black_level)
    plane = np.clip((raw.samples.astype(np.float64) - meta.black_level) / scale, 0.0, 1.0)
    return MosaicF(plane=plane, cfa=raw.cfa)


def shading_correct(m: MosaicF, g: GainMap) -> MosaicF:
    """Multiply every sample by its CFA channel's shading gain, clamped to [0, 1]."""
    if g.cfa.letters != m.cfa.letters:
        raise DimensionError(
            f"gain map CFA layout {g.cfa.letters} does not match mosaic {m.cfa.letters}"
        )
    if m.height % 2 or m.width % 2:
        raise DimensionError("mosaic dimensions must be even for shading correction")
    h2, w2 = m.height // 2, m.width // 2
    gains = g.gains
    if gains.shape[2:] != (h2, w2):
        if gains.shape[2] > h2 or gains.shape[3] > w2:
            raise DimensionError(
                f"gain map {gains.shape[2:]} larger than mosaic channel planes {(h2, w2)}"
            )
        up = np.empty((2, 2, h2, w2), dtype=np.float64)
        for dy in range(2):
            for dx in range(2):
                up[dy, dx] = _resample_plane(gains[dy, dx], w2, h2)
        gains = up
    out = m.plane.copy()
    for dy in range(2):
        for dx in range(2):
            out[dy::2, dx::2] *= gains[dy, dx]
    return MosaicF(plane=np.clip(out, 0.0, 1.0), cfa=m.cfa)


# Bilinear interpolation kernels; mask-normalized convolution makes them
# exact at known sites and yields the classic neighbor averages elsewhere.
_KERNEL_G = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]])
_KERNEL_RB = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])


def _cfa_masks(cfa: CfaPattern, shape: tuple[int, int]) -> dict[str, np.ndarray]:
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    masks = {"R": np.zeros(shape, bool), "G": np.zeros(shape, bool), "B": np.zeros(shape, bool)}
    for dy in range(2):
        for dx in range(2):
            masks[cfa.color_at(dy, dx)] |= ((yy % 2) == dy) & ((xx % 2) == dx)
    return masks


def _interp_masked(values: np.ndarray, mask: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    num = convolve(values * mask, kernel, mode="mirror")
    den = convolve(mask.astype(np.float64), kernel, mode="mirror")
    return num / den


def demosaic_bilinear(m: MosaicF) -> ImageF:
    """Reconstruct RGB by averaging each missing color's nearest neighbors."""
    _check_even(m)
    masks = _cfa_masks(m.cfa, m.plane.shape)
    plane = m.plane
    out = np.empty((m.height, m.width, 3), dtype=np.float64)
    for ch, color in enumerate("RGB"):
        kernel = _KERNEL_G if color == "G" else _KERNEL_RB
        out[:, :, ch] = _interp_masked(plane, masks[color], kernel)
    return ImageF(data=np.clip(out, 0.0, 1.0), space=ColorSpace.CAMERA_LINEAR)


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Shift with mirror padding: result[y, x] = a[y + dy, x + dx]."""
    pad = max(abs(dy), abs(dx))
    padded = np.pad(a, pad, mode="reflect")
    h, w = a.shape
    return padded[pad + dy : pad + dy + h, pad + dx : pad + dx + w]


def demosaic_menon(m: MosaicF) -> ImageF:
    """Directional-filtering demosaic (green H/V candidates, gradient-selected).

    Green is interpolated along rows and columns with a second-order
    same-color correction; the direction with the smaller accumulated
    color-difference gradient in a 5x5 neighborhood wins. Red and blue
    are rebuilt by bilinear interpolation of color differences against
    the selected green. The refinement iterations of the full
    directional-filtering algorithm are deliberately omitted.
    """
    _check_even(m)
    if m.height < 8 or m.width < 8:
        raise DimensionError(f"directional demosaic needs at least 8x8, got {m.width}x{m.height}")
    plane = m.plane
    masks = _cfa_masks(m.cfa, plane.shape)
    rb_mask = masks["R"] | masks["B"]

    # Hamilton-Adams style directional green candidates (valid at R/B sites).
    gh = 0.5 * (_shift(plane, 0, -1) + _shift(plane, 0, 1)) + 0.25 * (
        2.0 * plane - _shift(plane, 0, -2) - _shift(plane, 0, 2)
    )
    gv = 0.5 * (_shift(plane, -1, 0) + _shift(plane, 1, 0)) + 0.25 * (
        2.0 * plane - _shift(plane, -2, 0) - _shift(plane, 2, 0)
    )

    # Gradients of the chroma (color-difference) fields between same-color
    # sites two pixels apart, accumulated over a 5x5 window of R/B sites.
    ch = np.where(rb_mask, plane - gh, 0.0)
    cv = np.where(rb_mask, plane - gv, 0.0)
    dh = np.abs(ch - _shift(ch, 0, 2))
    dv = np.abs(cv - _shift(cv, 2, 0))
    window = np.ones((5, 5))
    sum_dh = convolve(np.where(rb_mask, dh, 0.0), window, mode="mirror")
    sum_dv = convolve(np.where(rb_mask, dv, 0.0), window, mode="mirror")
    use_vertical = sum_dv <= sum_dh

    green = np.where(masks["G"], plane, np.where(use_vertical, gv, gh))

    out = np.empty((m.height, m.width, 3), dtype=np.float64)
    out[:, :, 1] = green
    for ch_idx, color in ((0, "R"), (2, "B")):
        diff = np.where(masks[color], plane - green, 0.0)
        out[:, :, ch_idx] = green + _interp_masked(diff, masks[color], _KERNEL_RB)
    return ImageF(data=np.clip(out, 0.0, 1.0), space=ColorSpace.CAMERA_LINEAR)


def _check_even(m: MosaicF) -> None:
    if m.height % 2 or m.width % 2:
        raise DimensionError(f"demosaic needs even dimensions, got {m.width}x{m.height}")


def _area_resample_axis(data: np.ndarray, out_n: int, axis: int) -> np.ndarray:
    """Exact box-filter (area-average) resample along one axis."""
    data = np.moveaxis(data, axis, 0)
    in_n = data.shape[0]
    flat = data.reshape(in_n, -1)
    if in_n % out_n == 0:
        # integer factor: plain block mean
        k = in_n // out_n
        res = flat.reshape(out_n, k, -1).mean(axis=1)
    else:
        cs = np.concatenate([np.zeros((1, flat.shape[1])), np.cumsum(flat, axis=0)])
        edges = np.arange(out_n + 1) * (in_n / out_n)
        idx = np.minimum(edges.astype(np.intp), in_n - 1)
        frac = edges - idx
        integral = cs[idx] + frac[:, None] * flat[idx]
        integral[-1] = cs[in_n]  # exact upper endpoint
        res = np.diff(integral, axis=0) / (in_n / out_n)
    res = res.reshape((out_n,) + data.shape[1:])
    return np.moveaxis(res, 0, axis)


def _bilinear_axis(data: np.ndarray, out_n: int, axis: int) -> np.ndarray:
    """Center-aligned bilinear resample along one axis."""
    data = np.moveaxis(data, axis, 0)
    in_n = data.shape[0]
    coords = np.clip((np.arange(out_n) + 0.5) * (in_n / out_n) - 0.5, 0.0, in_n - 1.0)
    lo = coords.astype(np.intp)
    hi = np.minimum(lo + 1, in_n - 1)
    t = (coords - lo).reshape((-1,) + (1,) * (data.ndim - 1))
    res = data[lo] * (1.0 - t) + data[hi] * t
    return np.moveaxis(res, 0, axis)


def _resample_axis(data: np.ndarray, out_n: int, axis: int) -> np.ndarray:
    in_n = data.shape[axis]
    if out_n == in_n:
        return data
    if out_n < in_n:
        return _area_resample_axis(data, out_n, axis)
    return _bilinear_axis(data, out_n, axis)


def _resample_plane(plane: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    return _resample_axis(_resample_axis(plane, out_h, 0), out_w, 1)


def resize_box(img: ImageF, out_w: int, out_h: int) -> ImageF:
    """Resize with box-filter averaging down and bilinear interpolation up.

    The space tag is preserved; resizing to the identical size returns a
    bit-identical copy.
    """
    if out_w < 1 or out_h < 1:
        raise DimensionError(f"target size must be positive, got {out_w}x{out_h}")
    if (out_w, out_h) == (img.width, img.height):
        return ImageF(data=img.data.copy(), space=img.space)
    data = _resample_axis(_resample_axis(img.data, out_h, 0), out_w, 1)
    return ImageF(data=data, space=img.space)


_ROT_K = {
    Orientation.NORMAL: 0,
    Orientation.ROTATE90: 3,  # clockwise: (x, y) -> (H-1-y, x)
    Orientation.ROTATE180: 2,
    Orientation.ROTATE270: 1,
}


def orient(img: ImageF, o: Orientation) -> ImageF:
    """Rotate by the given orientation; pixel values are permuted, never mixed."""
    k = _ROT_K[o]
    if k == 0:
        return img
    data = np.ascontiguousarray(np.rot90(img.data, k=k, axes=(0, 1)))
    return ImageF(data=data, space=img.space)
