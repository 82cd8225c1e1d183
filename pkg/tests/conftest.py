"""Shared test fixtures: synthetic scenes, challenge-format files, metrics."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from nightisp import pipeline as pl
from nightisp.mosaic import ColorSpace, ImageF, MosaicF
from nightisp.rawio import CfaPattern, FrameMeta, RawFrame

CHANNEL = {"R": 0, "G": 1, "B": 2}


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))
    return float("inf") if mse == 0 else 10.0 * np.log10(1.0 / mse)


def mosaic_of(rgb: np.ndarray, cfa: str = "RGGB") -> MosaicF:
    """Sample an RGB image through a CFA into a mosaic plane."""
    pattern = CfaPattern(cfa)
    h, w, _ = rgb.shape
    plane = np.zeros((h, w))
    for dy in range(2):
        for dx in range(2):
            plane[dy::2, dx::2] = rgb[dy::2, dx::2, CHANNEL[pattern.color_at(dy, dx)]]
    return MosaicF(plane=plane, cfa=pattern)


def image(data: np.ndarray, space: ColorSpace = ColorSpace.SRGB_ENCODED) -> ImageF:
    return ImageF(data=np.asarray(data, dtype=np.float64), space=space)


def gray_image(value: float, h: int = 16, w: int = 16, space=ColorSpace.SRGB_ENCODED) -> ImageF:
    return image(np.full((h, w, 3), value), space)


def simple_meta(**overrides) -> FrameMeta:
    kwargs = dict(
        black_level=0,
        white_level=65535,
        as_shot_neutral=np.array([1.0, 1.0, 1.0]),
        cst=np.eye(3),
    )
    kwargs.update(overrides)
    return FrameMeta(**kwargs)


def make_night_scene(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    """Linear RGB night scene in [0, 1]: dim sky, light blobs, texture."""
    yy, xx = np.mgrid[0:h, 0:w]
    sky = 0.02 + 0.04 * (1 - yy / h)
    scene = np.stack([sky * 0.6, sky * 0.7, sky], axis=2)
    for _ in range(6):
        cy, cx = rng.integers(0, h), rng.integers(0, w)
        rad = int(rng.integers(max(2, min(h, w) // 10), max(3, min(h, w) // 4)))
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * (rad / 2.0) ** 2)))
        scene += blob[..., None] * rng.uniform(0.2, 1.0, 3) * rng.uniform(0.1, 0.5)
    scene += 0.05 * rng.random((h, w, 3))
    return np.clip(scene, 0.0, 1.0)


def write_challenge_frame(
    dir_path: Path,
    name: str,
    h: int,
    w: int,
    seed: int = 0,
    orientation: str = "normal",
    illuminant=(0.55, 1.0, 0.7),
    black: int = 1024,
    white: int = 16383,
    extra_sidecar: dict | None = None,
) -> tuple[Path, Path]:
    """Write a synthetic capture in the challenge format (16-bit PNG + JSON)."""
    rng = np.random.default_rng(seed)
    rgb = make_night_scene(h, w, rng) * np.asarray(illuminant)
    plane = mosaic_of(rgb).plane
    counts = np.round(black + plane * (white - black)).astype(np.uint16)
    png = Path(dir_path) / f"{name}.png"
    Image.fromarray(counts).save(png)
    sidecar = {
        "black_level": black,
        "white_level": white,
        "as_shot_neutral": list(illuminant),
        "cfa_pattern": "RGGB",
        "orientation": orientation,
        "noise_profile": [1e-5, 1e-6],
        "frame_id": name,
        "color_matrix": [
            [0.4124, 0.3576, 0.1805],
            [0.2126, 0.7152, 0.0722],
            [0.0193, 0.1192, 0.9505],
        ],
    }
    if extra_sidecar:
        sidecar.update(extra_sidecar)
    json_path = Path(dir_path) / f"{name}.json"
    json_path.write_text(json.dumps(sidecar), encoding="utf-8")
    return png, json_path


@contextmanager
def temporary_stage(stage: pl.StageDef):
    """Register a stage for one test, then drop it from the registry."""
    pl.register_stage(stage)
    try:
        yield stage
    finally:
        del pl._REGISTRY[stage.stage_id]


def sleep_stage(stage_id: str, seconds: float) -> pl.StageDef:
    def fn(value, params, ctx):
        time.sleep(seconds)
        return value

    return pl.StageDef(stage_id, pl.IMAGE_KINDS, pl.SAME, (), fn)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
