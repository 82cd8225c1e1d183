"""Decoding of challenge-format inputs: 16-bit mosaic PNG + JSON sidecar.

A capture is a single-channel 16-bit PNG holding the Bayer mosaic plus a
UTF-8 JSON sidecar with the shot metadata. The sidecar schema is:

    black_level      int, sensor counts
    white_level      int, sensor counts
    as_shot_neutral  [r, g, b], camera-space illuminant
    cfa_pattern      "RGGB" | "BGGR" | "GRBG" | "GBRG" (default "RGGB")
    color_matrix     3x3 nested list, camera -> XYZ (default: shipped
                     fallback matrix, see data/default_matrices.json)
    orientation      "normal" | "rotate90" | "rotate180" | "rotate270"
                     (or 0/90/180/270; default "normal")
    noise_profile    [a, b] for the affine model sigma^2(x) = a*x + b
                     (optional)

Unknown fields are ignored. Calibration white frames use the same format
and feed :func:`build_gain_map`, which derives a per-CFA-channel lens
shading gain field.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.ndimage import gaussian_filter

from .errors import DecodeError, DegenerateCalibration, DimensionError, SchemaError

_DATA_DIR = Path(__file__).parent / "data"

#: PIL modes accepted as "single-channel 16-bit"
_PNG_16BIT_MODES = ("I;16", "I;16B", "I;16L", "I;16N", "I")


class Orientation(enum.Enum):
    NORMAL = "normal"
    ROTATE90 = "rotate90"
    ROTATE180 = "rotate180"
    ROTATE270 = "rotate270"


_ORIENTATION_ALIASES = {
    "normal": Orientation.NORMAL,
    "rotate90": Orientation.ROTATE90,
    "rotate180": Orientation.ROTATE180,
    "rotate270": Orientation.ROTATE270,
    0: Orientation.NORMAL,
    90: Orientation.ROTATE90,
    180: Orientation.ROTATE180,
    270: Orientation.ROTATE270,
}


def default_camera_to_xyz() -> np.ndarray:
    """Fallback camera->XYZ matrix, shipped as configuration data."""
    return np.asarray(_load_matrices()["camera_to_xyz_fallback"], dtype=np.float64)


def xyz_to_srgb_matrix() -> np.ndarray:
    """The IEC 61966-2-1 XYZ -> linear sRGB matrix, shipped as configuration."""
    return np.asarray(_load_matrices()["xyz_to_srgb"], dtype=np.float64)


_matrices_cache: dict | None = None


def _load_matrices() -> dict:
    global _matrices_cache
    if _matrices_cache is None:
        with open(_DATA_DIR / "default_matrices.json", encoding="utf-8") as fh:
            _matrices_cache = json.load(fh)
    return _matrices_cache


@dataclass(frozen=True)
class CfaPattern:
    """A 2x2 color filter array layout, row-major over {R, G, B}."""

    letters: str  # e.g. "RGGB"

    def __post_init__(self):
        s = self.letters.upper()
        object.__setattr__(self, "letters", s)
        if len(s) != 4 or sorted(s) != ["B", "G", "G", "R"]:
            raise SchemaError(
                "cfa_pattern",
                f"cfa_pattern must be a 2x2 layout with one R, two G, one B; got {self.letters!r}",
            )

    def color_at(self, dy: int, dx: int) -> str:
        return self.letters[(dy % 2) * 2 + (dx % 2)]

    def positions_of(self, color: str) -> list[tuple[int, int]]:
        return [(i // 2, i % 2) for i, c in enumerate(self.letters) if c == color]


@dataclass(frozen=True)
class FrameMeta:
    """Per-shot metadata carried by the JSON sidecar."""

    black_level: int
    white_level: int
    as_shot_neutral: np.ndarray  # (3,), camera space, G-normalized
    cst: np.ndarray  # (3, 3) camera -> XYZ
    orientation: Orientation = Orientation.NORMAL
    noise_profile: tuple[float, float] | None = None
    frame_id: str = ""

    def __post_init__(self):
        if not (0 <= self.black_level < self.white_level <= 65535):
            raise SchemaError(
                "black_level",
                f"need 0 <= black_level < white_level <= 65535, got "
                f"({self.black_level}, {self.white_level})",
            )
        neutral = np.asarray(self.as_shot_neutral, dtype=np.float64)
        if neutral.shape != (3,) or not np.all(np.isfinite(neutral)) or np.any(neutral <= 0):
            raise SchemaError("as_shot_neutral", "as_shot_neutral must be 3 positive finite values")
        # store G-normalized
        object.__setattr__(self, "as_shot_neutral", neutral / neutral[1])
        cst = np.asarray(self.cst, dtype=np.float64)
        if cst.shape != (3, 3) or not np.all(np.isfinite(cst)):
            raise SchemaError("color_matrix", "color_matrix must be a finite 3x3 matrix")
        object.__setattr__(self, "cst", cst)
        if not isinstance(self.orientation, Orientation):
            raise SchemaError("orientation", f"unknown orientation {self.orientation!r}")
        if self.noise_profile is not None:
            a, b = self.noise_profile
            if not (np.isfinite(a) and np.isfinite(b)):
                raise SchemaError("noise_profile", "noise_profile coefficients must be finite")
            object.__setattr__(self, "noise_profile", (float(a), float(b)))


@dataclass(frozen=True)
class RawFrame:
    """One Bayer mosaic plane with its CFA layout and shot metadata."""

    samples: np.ndarray  # (height, width) uint16
    cfa: CfaPattern
    meta: FrameMeta

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise DimensionError(f"mosaic must be 2-D, got shape {s.shape}")
        h, w = s.shape
        if h % 2 or w % 2:
            raise DimensionError(f"mosaic dimensions must be even, got {w}x{h}")
        if h < 2 or w < 2:
            raise DimensionError(f"mosaic too small: {w}x{h}")
        object.__setattr__(self, "samples", s.astype(np.uint16, copy=False))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class GainMap:
    """Per-CFA-channel lens shading gains.

    ``gains[dy, dx]`` is the gain plane for the CFA position ``(dy, dx)``,
    sampled at that channel's sites (so each plane is half the mosaic
    resolution in each dimension). Gains are >= 1 and capped at build
    time; for a well-centered calibration the gain at the frame center
    is within 5% of 1.
    """

    gains: np.ndarray  # (2, 2, h/2, w/2) float64
    cfa: CfaPattern

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.float64)
        if g.ndim != 4 or g.shape[:2] != (2, 2):
            raise DimensionError(f"gain field must have shape (2, 2, h/2, w/2), got {g.shape}")
        if not np.all(np.isfinite(g)) or np.any(g < 1.0):
            raise ValueError("gains must be finite and >= 1")
        object.__setattr__(self, "gains", g)

    @property
    def mosaic_shape(self) -> tuple[int, int]:
        return self.gains.shape[2] * 2, self.gains.shape[3] * 2

    def save(self, path: str | Path) -> None:
        np.savez(path, gains=self.gains, cfa=np.array(self.cfa.letters))

    @classmethod
    def load(cls, path: str | Path) -> "GainMap":
        with np.load(path) as data:
            return cls(gains=data["gains"], cfa=CfaPattern(str(data["cfa"])))


def _require(sidecar: dict, key: str):
    if key not in sidecar:
        raise SchemaError(key)
    return sidecar[key]


def parse_meta(sidecar: dict, frame_id: str = "") -> tuple[FrameMeta, CfaPattern]:
    """Validate a decoded sidecar dict into (FrameMeta, CfaPattern).

    Unknown fields are ignored; missing color_matrix falls back to the
    shipped dataset-mean matrix.
    """
    try:
        black = int(_require(sidecar, "black_level"))
        white = int(_require(sidecar, "white_level"))
    except (TypeError, ValueError) as exc:
        raise SchemaError("black_level", f"levels must be integers: {exc}") from None
    neutral = _require(sidecar, "as_shot_neutral")

    cst = sidecar.get("color_matrix")
    cst = default_camera_to_xyz() if cst is None else np.asarray(cst, dtype=np.float64)

    raw_orient = sidecar.get("orientation", "normal")
    orientation = _ORIENTATION_ALIASES.get(raw_orient)
    if orientation is None:
        raise SchemaError("orientation", f"unknown orientation {raw_orient!r}")

    noise_profile = sidecar.get("noise_profile")
    if noise_profile is not None:
        try:
            a, b = (float(v) for v in noise_profile)
        except (TypeError, ValueError):
            raise SchemaError("noise_profile", "noise_profile must be two numbers [a, b]") from None
        noise_profile = (a, b)

    cfa = CfaPattern(str(sidecar.get("cfa_pattern", "RGGB")))
    try:
        neutral = np.asarray(neutral, dtype=np.float64)
    except ValueError:
        raise SchemaError("as_shot_neutral", "as_shot_neutral must be numeric") from None
    meta = FrameMeta(
        black_level=black,
        white_level=white,
        as_shot_neutral=neutral,
        cst=cst,
        orientation=orientation,
        noise_profile=noise_profile,
        frame_id=str(sidecar.get("frame_id", frame_id)),
    )
    return meta, cfa


def load_raw(png_path: str | Path, json_path: str | Path) -> RawFrame:
    """Decode a challenge capture into a validated :class:`RawFrame`.

    Raises DecodeError for malformed or non-16-bit-grayscale PNGs,
    SchemaError for missing/invalid sidecar fields and DimensionError
    for odd mosaic dimensions.
    """
    png_path, json_path = Path(png_path), Path(json_path)
    try:
        with Image.open(png_path) as img:
            if img.mode not in _PNG_16BIT_MODES:
                raise DecodeError(
                    f"{png_path}: expected single-channel 16-bit PNG, got mode {img.mode!r}"
                )
            samples = np.asarray(img)
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeError(f"{png_path}: cannot decode PNG: {exc}") from None
    if samples.ndim != 2:
        raise DecodeError(f"{png_path}: expected a single channel, got shape {samples.shape}")
    if samples.dtype != np.uint16:
        # mode "I" decodes to int32; reject true >16-bit data
        if samples.min() < 0 or samples.max() > 65535:
            raise DecodeError(f"{png_path}: sample values exceed 16-bit range")
        samples = samples.astype(np.uint16)

    try:
        sidecar = json.loads(json_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError("sidecar", f"cannot read sidecar {json_path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError("sidecar", f"{json_path} is not valid JSON: {exc}") from None
    if not isinstance(sidecar, dict):
        raise SchemaError("sidecar", f"{json_path}: sidecar must be a JSON object")

    meta, cfa = parse_meta(sidecar, frame_id=png_path.stem)
    return RawFrame(samples=samples, cfa=cfa, meta=meta)


def build_gain_map(
    calibration: RawFrame, smoothing_sigma: float = 16.0, gain_cap: float = 4.0
) -> GainMap:
    """Derive a lens-shading gain field from a flat-field (white) capture.

    Each CFA channel plane is level-normalized, Gaussian-smoothed with
    ``smoothing_sigma`` (in channel-plane pixels), and inverted around its
    own maximum: gain(p) = max(S) / S(p), clamped to [1, gain_cap].
    """
    if gain_cap < 1.0:
        raise ValueError(f"gain_cap must be >= 1, got {gain_cap}")
    meta = calibration.meta
    scale = float(meta.white_level - meta.black_level)
    norm = np.clip(
        (calibration.samples.astype(np.float64) - meta.black_level) / scale, 0.0, 1.0
    )
    h2, w2 = calibration.height // 2, calibration.width // 2
    gains = np.empty((2, 2, h2, w2), dtype=np.float64)
    for dy in range(2):
        for dx in range(2):
            plane = norm[dy::2, dx::2]
            smoothed = gaussian_filter(plane, sigma=smoothing_sigma, mode="mirror")
            if np.any(smoothed <= 0.0):
                raise DegenerateCalibration(
                    f"CFA position ({dy},{dx}): smoothed calibration plane has values <= 0"
                )
            gains[dy, dx] = np.clip(smoothed.max() / smoothed, 1.0, gain_cap)
    return GainMap(gains=gains, cfa=calibration.cfa)
