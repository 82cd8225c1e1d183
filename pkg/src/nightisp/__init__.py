"""Nighttime-photography ISP toolkit and pairwise study harness."""

__version__ = "0.1.0"

from . import color, denoise, evalstudy, mosaic, pipeline, rawio, tone  # noqa: F401
