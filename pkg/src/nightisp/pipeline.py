"""Declarative stage composition, execution and the efficiency harness.

A pipeline spec is plain data: an ordered list of (stage_id, params)
resolved against a string-keyed stage registry, plus an output contract
(canvas size and file format). Validation checks stage ids, parameter
schemas and the color-space chain before anything runs. Execution times
each stage with a monotonic clock; decoding and encoding live outside
the timed region.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np
from PIL import Image

from . import color as color_ops
from . import denoise as denoise_ops
from . import mosaic as mosaic_ops
from . import tone as tone_ops
from .errors import SpecError, StageExecutionError
from .mosaic import ColorSpace, ImageF, MosaicF
from .rawio import CfaPattern, FrameMeta, GainMap, Orientation, RawFrame

# Value kinds a stage can consume or produce. "raw" is the decoded frame,
# "mosaic" the normalized Bayer plane, the rest are ImageF space tags.
KIND_RAW = "raw"
KIND_MOSAIC = "mosaic"
RGB_KINDS = frozenset({"camera_linear", "srgb_linear", "srgb_encoded"})
IMAGE_KINDS = RGB_KINDS | {"xyz", "ycbcr"}

#: "same" marks stages that preserve their input kind.
SAME = "same"

_REQUIRED = object()


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # "float" | "int" | "bool" | "str" | "json"
    default: Any = _REQUIRED
    lo: float | None = None
    hi: float | None = None
    choices: tuple | None = None
    check: Callable[[Any], str | None] | None = None

    def coerce(self, value: Any) -> tuple[Any, str | None]:
        if self.kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return None, f"{self.name} must be a number"
            value = float(value)
            if not math.isfinite(value):
                return None, f"{self.name} must be finite"
        elif self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                return None, f"{self.name} must be an integer"
        elif self.kind == "bool":
            if not isinstance(value, bool):
                return None, f"{self.name} must be a boolean"
        elif self.kind == "str":
            if not isinstance(value, str):
                return None, f"{self.name} must be a string"
        if self.choices is not None and value not in self.choices:
            return None, f"{self.name} must be one of {self.choices}, got {value!r}"
        if self.lo is not None and isinstance(value, (int, float)) and value < self.lo:
            return None, f"{self.name} must be >= {self.lo}, got {value}"
        if self.hi is not None and isinstance(value, (int, float)) and value > self.hi:
            return None, f"{self.name} must be <= {self.hi}, got {value}"
        if self.check is not None:
            err = self.check(value)
            if err:
                return None, f"{self.name}: {err}"
        return value, None


@dataclass(frozen=True)
class RenderContext:
    """Per-run inputs shared by stages: shot metadata, seed, calibration."""

    meta: FrameMeta
    cfa: CfaPattern
    seed: int = 0
    gain_map: GainMap | None = None


@dataclass(frozen=True)
class StageDef:
    stage_id: str
    inputs: frozenset[str]
    output: str  # a kind, or SAME to preserve the input kind
    params: tuple[Param, ...]
    fn: Callable[[Any, dict, RenderContext], Any]

    def output_kind(self, input_kind: str) -> str:
        return input_kind if self.output == SAME else self.output


_REGISTRY: dict[str, StageDef] = {}


def register_stage(stage: StageDef, replace: bool = False) -> None:
    if not replace and stage.stage_id in _REGISTRY:
        raise ValueError(f"stage {stage.stage_id!r} already registered")
    _REGISTRY[stage.stage_id] = stage


def registered_stages() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


@dataclass(frozen=True)
class OutputSpec:
    width: int = 1024
    height: int = 768
    format: str = "jpeg"  # "jpeg" | "png"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SpecError(f"output size must be positive, got {self.width}x{self.height}")
        if self.format not in ("jpeg", "png"):
            raise SpecError(f"output format must be jpeg or png, got {self.format!r}")


@dataclass(frozen=True)
class StageInvocation:
    stage_id: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineSpec:
    name: str
    stages: tuple[StageInvocation, ...]
    output: OutputSpec = OutputSpec()

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineSpec":
        if not isinstance(doc, dict):
            raise SpecError("pipeline spec must be a JSON object")
        stages_doc = doc.get("stages")
        if not isinstance(stages_doc, list):
            raise SpecError("pipeline spec needs a 'stages' list")
        stages = []
        for i, entry in enumerate(stages_doc):
            if not isinstance(entry, dict) or "stage" not in entry:
                raise SpecError("each stage entry needs a 'stage' id", stage_index=i)
            params = entry.get("params", {})
            if not isinstance(params, dict):
                raise SpecError("stage params must be an object", stage_index=i)
            stages.append(StageInvocation(stage_id=str(entry["stage"]), params=params))
        out_doc = doc.get("output", {})
        if not isinstance(out_doc, dict):
            raise SpecError("'output' must be an object")
        output = OutputSpec(
            width=int(out_doc.get("width", 1024)),
            height=int(out_doc.get("height", 768)),
            format=str(out_doc.get("format", "jpeg")),
        )
        return cls(name=str(doc.get("name", "unnamed")), stages=tuple(stages), output=output)

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class StageReport:
    stage_id: str
    wall_time: float  # seconds
    space: str
    stats: tuple[tuple[float, float, float], ...]  # (min, max, mean) per channel


def _validate_params(stage: StageDef, invocation: StageInvocation, index: int) -> dict:
    declared = {p.name: p for p in stage.params}
    for name in invocation.params:
        if name not in declared:
            raise SpecError(f"{stage.stage_id}: unknown parameter {name!r}", stage_index=index)
    coerced = {}
    for param in stage.params:
        if param.name in invocation.params:
            value, err = param.coerce(invocation.params[param.name])
            if err:
                raise SpecError(f"{stage.stage_id}: {err}", stage_index=index)
        elif param.default is _REQUIRED:
            raise SpecError(
                f"{stage.stage_id}: missing required parameter {param.name!r}", stage_index=index
            )
        else:
            value = param.default
        coerced[param.name] = value
    return coerced


def validate(spec: PipelineSpec) -> list[dict]:
    """Check stage ids, parameter schemas and the color-space chain.

    Returns the per-stage coerced parameter dicts; raises SpecError with
    the index of the first offending stage.
    """
    kind = KIND_RAW
    resolved = []
    for i, invocation in enumerate(spec.stages):
        stage = _REGISTRY.get(invocation.stage_id)
        if stage is None:
            raise SpecError(f"unknown stage {invocation.stage_id!r}", stage_index=i)
        if kind not in stage.inputs:
            raise SpecError(
                f"{invocation.stage_id} accepts {sorted(stage.inputs)} but the chain "
                f"provides {kind!r}",
                stage_index=i,
            )
        resolved.append(_validate_params(stage, invocation, i))
        kind = stage.output_kind(kind)
    if kind != ColorSpace.SRGB_ENCODED.value:
        raise SpecError(
            f"pipeline must end in encoded sRGB, ends in {kind!r}",
            stage_index=len(spec.stages) - 1 if spec.stages else None,
        )
    return resolved


def run(
    raw: RawFrame,
    spec: PipelineSpec,
    seed: int = 0,
    gain_map: GainMap | None = None,
) -> tuple[ImageF, list[StageReport]]:
    """Execute the stage chain on a decoded frame, timing each stage.

    Only stage bodies are timed (monotonic clock); decoding happened
    before this call and file encoding happens after it. The reported
    total is by construction the sum of the per-stage times.
    """
    params_by_stage = validate(spec)
    ctx = RenderContext(meta=raw.meta, cfa=raw.cfa, seed=seed, gain_map=gain_map)
    value: Any = raw
    reports: list[StageReport] = []
    for i, invocation in enumerate(spec.stages):
        stage = _REGISTRY[invocation.stage_id]
        start = time.perf_counter()
        try:
            value = stage.fn(value, params_by_stage[i], ctx)
        except SpecError:
            raise
        except Exception as exc:
            raise StageExecutionError(i, invocation.stage_id, exc) from exc
        elapsed = time.perf_counter() - start
        reports.append(
            StageReport(
                stage_id=invocation.stage_id,
                wall_time=elapsed,
                space=_kind_of(value),
                stats=_value_stats(value),
            )
        )
    if not isinstance(value, ImageF) or value.space is not ColorSpace.SRGB_ENCODED:
        raise SpecError("pipeline did not produce an encoded sRGB image")
    return value, reports


def _kind_of(value: Any) -> str:
    if isinstance(value, RawFrame):
        return KIND_RAW
    if isinstance(value, MosaicF):
        return KIND_MOSAIC
    return value.space.value


def _value_stats(value: Any) -> tuple[tuple[float, float, float], ...]:
    if isinstance(value, RawFrame):
        planes = [value.samples]
    elif isinstance(value, MosaicF):
        planes = [value.plane]
    else:
        planes = [value.data[:, :, c] for c in range(value.data.shape[2])]
    return tuple(
        (float(p.min()), float(p.max()), float(p.mean())) for p in planes
    )


def total_time(reports: list[StageReport]) -> float:
    return sum(r.wall_time for r in reports)


@dataclass(frozen=True)
class BenchEntry:
    frame_id: str
    seconds: float  # median of the per-repeat totals
    per_stage: tuple[tuple[str, float], ...]  # (label, median seconds) in stage order


@dataclass(frozen=True)
class BenchSummary:
    spec_name: str
    repeats: int
    entries: tuple[BenchEntry, ...]
    mean_seconds: float | None  # None for an empty input list

    def to_json(self) -> str:
        doc = {
            "spec": self.spec_name,
            "repeats": self.repeats,
            "mean_seconds": self.mean_seconds,
            "images": [
                {
                    "frame_id": e.frame_id,
                    "seconds": e.seconds,
                    "per_stage": {label: sec for label, sec in e.per_stage},
                }
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2)

    def format_table(self) -> str:
        lines = [f"pipeline {self.spec_name}: {len(self.entries)} image(s), "
                 f"median of {self.repeats} repeat(s)"]
        if not self.entries:
            lines.append("(no inputs)")
            return "\n".join(lines)
        width = max(len(e.frame_id) for e in self.entries)
        for e in self.entries:
            lines.append(f"{e.frame_id:<{width}}  {e.seconds * 1000.0:9.2f} ms")
        lines.append(f"{'mean':<{width}}  {self.mean_seconds * 1000.0:9.2f} ms")
        labels = [label for label, _ in self.entries[0].per_stage]
        lw = max(len(label) for label in labels)
        lines.append("per-stage mean across images:")
        for idx, label in enumerate(labels):
            mean_stage = sum(e.per_stage[idx][1] for e in self.entries) / len(self.entries)
            lines.append(f"  {label:<{lw}}  {mean_stage * 1000.0:9.2f} ms")
        return "\n".join(lines)


def bench(
    raws: list[RawFrame],
    spec: PipelineSpec,
    repeats: int = 3,
    seed: int = 0,
    gain_map: GainMap | None = None,
    parallel: bool = False,
) -> BenchSummary:
    """Median-of-repeats timing per image, averaged across images.

    Rows keep the input order; stage labels carry their index so repeated
    stage ids stay distinct. ``parallel`` may overlap distinct images for
    throughput exploration; honest timing wants the serial default.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    validate(spec)

    def measure(raw: RawFrame) -> BenchEntry:
        totals = []
        per_stage: list[list[float]] = [[] for _ in spec.stages]
        for _ in range(repeats):
            _, reports = run(raw, spec, seed=seed, gain_map=gain_map)
            totals.append(total_time(reports))
            for j, rep in enumerate(reports):
                per_stage[j].append(rep.wall_time)
        labels = [f"{j:02d}:{s.stage_id}" for j, s in enumerate(spec.stages)]
        return BenchEntry(
            frame_id=raw.meta.frame_id,
            seconds=statistics.median(totals),
            per_stage=tuple(
                (labels[j], statistics.median(times)) for j, times in enumerate(per_stage)
            ),
        )

    if parallel and len(raws) > 1:
        with ThreadPoolExecutor() as pool:
            entries = tuple(pool.map(measure, raws))
    else:
        entries = tuple(measure(raw) for raw in raws)
    mean_seconds = sum(e.seconds for e in entries) / len(entries) if entries else None
    return BenchSummary(
        spec_name=spec.name, repeats=repeats, entries=entries, mean_seconds=mean_seconds
    )


# ---------------------------------------------------------------------------
# output finalization (untimed, mirrors the loading/saving exclusion)


def finalize_image(img: ImageF, output: OutputSpec) -> np.ndarray:
    """Fit the rendered image to the output canvas and quantize to 8 bits.

    The canvas is landscape width x height; portrait renders get the
    swapped canvas. Stage-list resizes are timed processing; this final
    fit belongs to encoding and is deliberately untimed.
    """
    if img.space is not ColorSpace.SRGB_ENCODED:
        raise ValueError(f"can only finalize encoded sRGB, got {img.space}")
    out_w, out_h = output.width, output.height
    if img.height > img.width:
        out_w, out_h = min(output.width, output.height), max(output.width, output.height)
    if (img.width, img.height) != (out_w, out_h):
        img = mosaic_ops.resize_box(img, out_w, out_h)
    return np.clip(np.round(img.data * 255.0), 0.0, 255.0).astype(np.uint8)


def save_image(array: np.ndarray, path: str | Path, fmt: str, quality: int = 95) -> None:
    image = Image.fromarray(array, mode="RGB")
    if fmt == "jpeg":
        image.save(path, format="JPEG", quality=quality)
    else:
        image.save(path, format="PNG")


def output_extension(fmt: str) -> str:
    return ".jpg" if fmt == "jpeg" else ".png"


# ---------------------------------------------------------------------------
# stage registry


def _stage_normalize(value: RawFrame, params: dict, ctx: RenderContext) -> MosaicF:
    return mosaic_ops.normalize_levels(value)


def _stage_shading(value: MosaicF, params: dict, ctx: RenderContext) -> MosaicF:
    if ctx.gain_map is None:
        if params["required"]:
            raise ValueError("shading_correct requires a gain map (render with --gain-map)")
        return value
    return mosaic_ops.shading_correct(value, ctx.gain_map)


def _stage_demosaic_bilinear(value: MosaicF, params: dict, ctx: RenderContext) -> ImageF:
    return mosaic_ops.demosaic_bilinear(value)


def _stage_demosaic_menon(value: MosaicF, params: dict, ctx: RenderContext) -> ImageF:
    return mosaic_ops.demosaic_menon(value)


def _stage_resize(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    out_w, out_h = params["width"], params["height"]
    if params["fit_orientation"] and value.height > value.width:
        out_w, out_h = min(out_w, out_h), max(out_w, out_h)
    return mosaic_ops.resize_box(value, out_w, out_h)


def _stage_orient(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    mode = params["mode"]
    o = ctx.meta.orientation if mode == "metadata" else Orientation(mode)
    return mosaic_ops.orient(value, o)


def _stage_wb_gray_world(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return color_ops.apply_wb(value, color_ops.gray_world(value))


def _stage_wb_white_patch(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    est = color_ops.white_patch_subsampled(
        value, params["samples_per_trial"], params["trials"], ctx.seed
    )
    est = color_ops.clamp_wb_diagonal(est, params["bound_lo"], params["bound_hi"])
    return color_ops.apply_wb(value, est)


def _stage_wb_grayness_index(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    est = color_ops.grayness_index(value, params["blur_sigma"], params["top_fraction"])
    return color_ops.apply_wb(value, est)


def _stage_wb_metadata(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return color_ops.apply_wb(value, color_ops.Illuminant(ctx.meta.as_shot_neutral))


def _stage_camera_to_xyz(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return color_ops.camera_to_xyz(value, ctx.meta.cst)


def _stage_xyz_to_srgb(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return color_ops.xyz_to_srgb_linear(value)


def _stage_encode_srgb(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return color_ops.encode_srgb(value)


def _in_ycbcr(value: ImageF, op: Callable[[ImageF], ImageF]) -> ImageF:
    if value.space is ColorSpace.YCBCR:
        return op(value)
    result = color_ops.ycbcr_rgb(op(color_ops.rgb_ycbcr(value)), target_space=value.space)
    return result.with_data(np.clip(result.data, 0.0, 1.0))


def _stage_nlm(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    sigma = params["sigma"]
    if sigma == "auto":
        profile = ctx.meta.noise_profile
        if profile is not None:
            a, b = profile
            level = float(color_ops.luma601(value.data).mean()) if value.space is not ColorSpace.YCBCR \
                else float(value.data[:, :, 0].mean())
            estimate = denoise_ops.NoiseEstimate(sigma=math.sqrt(max(a * level + b, 0.0)))
        else:
            estimate = denoise_ops.estimate_noise_sigma(value)
    else:
        estimate = denoise_ops.NoiseEstimate(sigma=float(sigma))
    return denoise_ops.nlm_denoise(
        value,
        estimate,
        k_luma=params["k_luma"],
        k_chroma=params["k_chroma"],
        patch=params["patch"],
        window=params["window"],
    )


def _stage_gaussian_chroma(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return _in_ycbcr(value, lambda img: denoise_ops.gaussian_chroma(img, params["sigma_px"]))


def _stage_tv_luma(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return _in_ycbcr(
        value, lambda img: denoise_ops.tv_denoise_luma(img, params["lam"], params["iterations"])
    )


def _stage_identity(value: Any, params: dict, ctx: RenderContext) -> Any:
    return value


def _check_sigma_param(value: Any) -> str | None:
    if value == "auto":
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return "must be 'auto' or a number"
    if value < 0 or not math.isfinite(value):
        return "must be >= 0 and finite"
    return None


def _check_knots(value: Any) -> str | None:
    if not isinstance(value, list) or not value:
        return "must be a non-empty list of [luma, gamma] pairs"
    xs = []
    for entry in value:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            return "each knot must be a [luma, gamma] pair"
        x, g = entry
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (x, g)):
            return "knot values must be numbers"
        if not (0 <= x <= 1) or g <= 0:
            return "knot luma must lie in [0, 1] and gamma must be > 0"
        xs.append(x)
    if any(b <= a for a, b in zip(xs, xs[1:])):
        return "knot lumas must be strictly increasing"
    return None


def _check_prototypes(value: Any) -> str | None:
    if not isinstance(value, list):
        return "must be a list of hue-window objects"
    keys = {"hue_lo", "hue_hi", "target_hue", "sat_gain", "feather"}
    protos = []
    for entry in value:
        if not isinstance(entry, dict) or not {"hue_lo", "hue_hi", "target_hue"} <= set(entry):
            return "each prototype needs hue_lo, hue_hi and target_hue"
        if set(entry) - keys:
            return f"unknown prototype keys {sorted(set(entry) - keys)}"
        try:
            protos.append(tone_ops.MemoryColorPrototype(**entry))
        except (TypeError, ValueError) as exc:
            return str(exc)
    try:
        tone_ops.memory_color_enhance(
            ImageF(data=np.zeros((1, 1, 3)), space=ColorSpace.SRGB_ENCODED), protos
        )
    except ValueError as exc:
        return str(exc)
    return None


def _check_hue_window(value: Any) -> str | None:
    if value is None:
        return None
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return "must be null or a [lo_deg, hi_deg] pair"
    return None


def _stage_lcc(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.local_contrast_correction(value, params["mask_sigma"])


def _stage_mean_stretch(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.mean_contrast_stretch(value, params["beta"])


def _stage_s_curve(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.s_curve(value, params["center"], params["strength"])


def _stage_hist_stretch(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.histogram_stretch(value, params["p_lo"], params["p_hi"])


def _stage_conditional(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    tp = tone_ops.ToneParams(
        gamma=params["dark_gamma"],
        s_center=params["bright_center"],
        s_strength=params["bright_strength"],
    )
    return tone_ops.conditional_contrast(value, params["dark_thresh"], params["bright_thresh"], tp)


def _stage_naka(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.naka_rushton(value, params["alpha"])


def _stage_nite(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.nite_tonemap(value, (params["grid_x"], params["grid_y"]), params["alpha_scale"])


def _stage_unsharp(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.unsharp_mask(value, params["radius"], params["amount"], params["threshold"])


def _stage_autocontrast(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.autocontrast(value, params["cutoff_pct"])


def _stage_saturation(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    window = params["hue_window"]
    return tone_ops.saturation_adjust(
        value, params["factor"], tuple(window) if window is not None else None
    )


def _stage_memory_color(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    protos = [tone_ops.MemoryColorPrototype(**entry) for entry in params["prototypes"]]
    return tone_ops.memory_color_enhance(value, protos)


def _stage_piecewise_gamma(value: ImageF, params: dict, ctx: RenderContext) -> ImageF:
    return tone_ops.piecewise_gamma(value, [tuple(k) for k in params["knots"]])


def _register_builtin_stages() -> None:
    value_spaces = RGB_KINDS  # display-referred value operators
    stages = [
        StageDef("normalize_levels", frozenset({KIND_RAW}), KIND_MOSAIC, (), _stage_normalize),
        StageDef(
            "shading_correct",
            frozenset({KIND_MOSAIC}),
            KIND_MOSAIC,
            (Param("required", "bool", default=False),),
            _stage_shading,
        ),
        StageDef(
            "demosaic_bilinear",
            frozenset({KIND_MOSAIC}),
            "camera_linear",
            (),
            _stage_demosaic_bilinear,
        ),
        StageDef(
            "demosaic_menon", frozenset({KIND_MOSAIC}), "camera_linear", (), _stage_demosaic_menon
        ),
        StageDef(
            "resize_box",
            IMAGE_KINDS,
            SAME,
            (
                Param("width", "int", lo=1),
                Param("height", "int", lo=1),
                Param("fit_orientation", "bool", default=True),
            ),
            _stage_resize,
        ),
        StageDef(
            "orient",
            IMAGE_KINDS,
            SAME,
            (
                Param(
                    "mode",
                    "str",
                    default="metadata",
                    choices=("metadata", "normal", "rotate90", "rotate180", "rotate270"),
                ),
            ),
            _stage_orient,
        ),
        StageDef("wb_gray_world", value_spaces, SAME, (), _stage_wb_gray_world),
        StageDef(
            "wb_white_patch",
            value_spaces,
            SAME,
            (
                Param("samples_per_trial", "int", default=256, lo=1),
                Param("trials", "int", default=100, lo=1),
                Param("bound_lo", "float", default=0.5, lo=1e-6),
                Param("bound_hi", "float", default=4.0, lo=1e-6),
            ),
            _stage_wb_white_patch,
        ),
        StageDef(
            "wb_grayness_index",
            value_spaces,
            SAME,
            (
                Param("blur_sigma", "float", default=3.0, lo=0.0),
                Param("top_fraction", "float", default=0.01, lo=1e-9, hi=1.0),
            ),
            _stage_wb_grayness_index,
        ),
        StageDef("wb_metadata", value_spaces, SAME, (), _stage_wb_metadata),
        StageDef(
            "camera_to_xyz", frozenset({"camera_linear"}), "xyz", (), _stage_camera_to_xyz
        ),
        StageDef("xyz_to_srgb_linear", frozenset({"xyz"}), "srgb_linear", (), _stage_xyz_to_srgb),
        StageDef("encode_srgb", frozenset({"srgb_linear"}), "srgb_encoded", (), _stage_encode_srgb),
        StageDef(
            "nlm_denoise",
            value_spaces | {"ycbcr"},
            SAME,
            (
                Param("sigma", "json", default="auto", check=_check_sigma_param),
                Param("k_luma", "float", default=0.6, lo=0.0),
                Param("k_chroma", "float", default=1.2, lo=0.0),
                Param("patch", "int", default=7, lo=1),
                Param("window", "int", default=21, lo=1),
            ),
            _stage_nlm,
        ),
        StageDef(
            "gaussian_chroma",
            value_spaces | {"ycbcr"},
            SAME,
            (Param("sigma_px", "float", default=2.0, lo=0.0),),
            _stage_gaussian_chroma,
        ),
        StageDef(
            "tv_denoise_luma",
            value_spaces | {"ycbcr"},
            SAME,
            (
                Param("lam", "float", default=0.1, lo=0.0),
                Param("iterations", "int", default=30, lo=1),
            ),
            _stage_tv_luma,
        ),
        StageDef(
            "local_contrast_correction",
            value_spaces,
            SAME,
            (Param("mask_sigma", "float", default=30.0, lo=1e-6),),
            _stage_lcc,
        ),
        StageDef(
            "mean_contrast_stretch",
            value_spaces,
            SAME,
            (Param("beta", "float", default=1.15, lo=0.0),),
            _stage_mean_stretch,
        ),
        StageDef(
            "s_curve",
            value_spaces,
            SAME,
            (
                Param("center", "float", default=0.0, lo=0.0, hi=1.0),
                Param("strength", "float", default=0.85, lo=1e-6),
            ),
            _stage_s_curve,
        ),
        StageDef(
            "histogram_stretch",
            value_spaces,
            SAME,
            (
                Param("p_lo", "float", default=1.0, lo=0.0, hi=100.0),
                Param("p_hi", "float", default=99.0, lo=0.0, hi=100.0),
            ),
            _stage_hist_stretch,
        ),
        StageDef(
            "conditional_contrast",
            value_spaces,
            SAME,
            (
                Param("dark_thresh", "float", default=0.18, lo=0.0, hi=1.0),
                Param("bright_thresh", "float", default=0.55, lo=0.0, hi=1.0),
                Param("dark_gamma", "float", default=0.7, lo=1e-6),
                Param("bright_center", "float", default=0.5, lo=0.0, hi=1.0),
                Param("bright_strength", "float", default=1.25, lo=1e-6),
            ),
            _stage_conditional,
        ),
        StageDef(
            "naka_rushton",
            value_spaces,
            SAME,
            (Param("alpha", "float", default=0.25, lo=1e-9),),
            _stage_naka,
        ),
        StageDef(
            "nite_tonemap",
            value_spaces,
            SAME,
            (
                Param("grid_x", "int", default=4, lo=1),
                Param("grid_y", "int", default=3, lo=1),
                Param("alpha_scale", "float", default=2.0, lo=1e-9),
            ),
            _stage_nite,
        ),
        StageDef(
            "unsharp_mask",
            value_spaces,
            SAME,
            (
                Param("radius", "float", default=2.0, lo=1e-6),
                Param("amount", "float", default=0.8, lo=0.0),
                Param("threshold", "float", default=0.01, lo=0.0, hi=1.0),
            ),
            _stage_unsharp,
        ),
        StageDef(
            "autocontrast",
            value_spaces,
            SAME,
            (Param("cutoff_pct", "float", default=1.0, lo=0.0,
                   check=lambda v: None if v < 50 else "must be < 50"),),
            _stage_autocontrast,
        ),
        StageDef(
            "saturation_adjust",
            value_spaces,
            SAME,
            (
                Param("factor", "float", default=1.0, lo=0.0),
                Param("hue_window", "json", default=None, check=_check_hue_window),
            ),
            _stage_saturation,
        ),
        StageDef(
            "memory_color_enhance",
            value_spaces,
            SAME,
            (Param("prototypes", "json", default=[], check=_check_prototypes),),
            _stage_memory_color,
        ),
        StageDef(
            "piecewise_gamma",
            value_spaces,
            SAME,
            (Param("knots", "json", check=_check_knots),),
            _stage_piecewise_gamma,
        ),
        StageDef("identity", IMAGE_KINDS | {KIND_RAW, KIND_MOSAIC}, SAME, (), _stage_identity),
    ]
    for stage in stages:
        register_stage(stage, replace=True)


_register_builtin_stages()


# ---------------------------------------------------------------------------
# shipped presets


def preset_dir():
    return resources.files("nightisp") / "presets"


def list_presets() -> list[str]:
    return sorted(
        entry.name.removesuffix(".json")
        for entry in preset_dir().iterdir()
        if entry.name.endswith(".json")
    )


def load_preset(name_or_path: str | Path) -> PipelineSpec:
    """Load a shipped preset by name or any pipeline spec JSON by path."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return PipelineSpec.from_json(path)
    candidate = preset_dir() / f"{name_or_path}.json"
    if not candidate.is_file():
        raise SpecError(f"unknown preset {name_or_path!r} (shipped: {', '.join(list_presets())})")
    return PipelineSpec.from_dict(json.loads(candidate.read_text(encoding="utf-8")))
