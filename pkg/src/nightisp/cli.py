"""Command-line entry point: render, bench, calibrate, score, serve.

Exit codes: 0 success, 1 partial or failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import pipeline as pl
from .errors import NightIspError
from .evalstudy import (
    VoteStore,
    format_leaderboards,
    leaderboard,
    load_manifest,
    load_times,
    score_study,
)
from .evalstudy.service import make_server
from .rawio import GainMap, RawFrame, build_gain_map, load_raw


def _expand_inputs(patterns: list[str]) -> list[Path]:
    paths: list[Path] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern))
        if not matches and Path(pattern).exists():
            matches = [pattern]
        paths.extend(Path(m) for m in matches)
    return [p for p in paths if p.suffix.lower() == ".png"]


def _sidecar_for(png: Path) -> Path:
    return png.with_suffix(".json")


def _parse_size(size: str) -> tuple[int, int]:
    try:
        w, h = size.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 1024x768, got {size!r}") from None


def render_one(
    png: Path,
    spec: pl.PipelineSpec,
    out_dir: Path,
    seed: int,
    gain_map: GainMap | None,
) -> Path:
    raw = load_raw(png, _sidecar_for(png))
    image, _reports = pl.run(raw, spec, seed=seed, gain_map=gain_map)
    array = pl.finalize_image(image, spec.output)
    out_path = out_dir / f"{raw.meta.frame_id or png.stem}{pl.output_extension(spec.output.format)}"
    pl.save_image(array, out_path, spec.output.format)
    return out_path


def _cmd_render(args: argparse.Namespace) -> int:
    inputs = _expand_inputs(args.inputs)
    if not inputs:
        print("render: no inputs", file=sys.stderr)
        return 1
    spec = pl.load_preset(args.preset)
    if args.size is not None:
        spec = pl.PipelineSpec(
            name=spec.name,
            stages=spec.stages,
            output=pl.OutputSpec(width=args.size[0], height=args.size[1], format=spec.output.format),
        )
    pl.validate(spec)
    gain_map = GainMap.load(args.gain_map) if args.gain_map else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(png: Path) -> tuple[Path, str | None]:
        try:
            render_one(png, spec, out_dir, args.seed, gain_map)
            return png, None
        except Exception as exc:  # report per-file, keep going
            return png, str(exc)

    jobs = max(1, args.jobs)
    if jobs == 1 or len(inputs) == 1:
        results = [work(p) for p in inputs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, inputs))
    failures = [(p, err) for p, err in results if err is not None]
    for p, err in failures:
        print(f"render: {p}: {err}", file=sys.stderr)
    print(f"rendered {len(results) - len(failures)}/{len(results)} frame(s) to {out_dir}")
    return 1 if failures else 0


def _cmd_bench(args: argparse.Namespace) -> int:
    inputs = _expand_inputs(args.inputs)
    spec = pl.load_preset(args.preset)
    gain_map = GainMap.load(args.gain_map) if args.gain_map else None
    raws = []
    for png in inputs:
        raws.append(load_raw(png, _sidecar_for(png)))
    parallel = args.parallel and not args.timing_strict
    summary = pl.bench(
        raws, spec, repeats=args.repeats, seed=args.seed, gain_map=gain_map, parallel=parallel
    )
    print(summary.format_table())
    if args.json:
        Path(args.json).write_text(summary.to_json(), encoding="utf-8")
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    inputs = _expand_inputs(args.white_frames)
    if not inputs:
        print("calibrate: no calibration frames", file=sys.stderr)
        return 1
    frames = [load_raw(p, _sidecar_for(p)) for p in inputs]
    shapes = {f.samples.shape for f in frames}
    if len(shapes) > 1:
        print(f"calibrate: dimension error, mixed frame sizes {sorted(shapes)}", file=sys.stderr)
        return 1
    mean = np.mean([f.samples.astype(np.float64) for f in frames], axis=0)
    averaged = RawFrame(
        samples=np.round(mean).astype(np.uint16), cfa=frames[0].cfa, meta=frames[0].meta
    )
    try:
        gain_map = build_gain_map(averaged, smoothing_sigma=args.sigma, gain_cap=args.cap)
    except NightIspError as exc:
        print(f"calibrate: {exc}", file=sys.stderr)
        return 1
    gain_map.save(args.out)
    print(f"gain map from {len(frames)} frame(s) -> {args.out}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    votes_path = Path(args.votes)
    if not votes_path.exists():
        print(f"score: votes file not found: {votes_path}", file=sys.stderr)
        return 1
    votes = VoteStore(votes_path).load()
    renditions = load_manifest(args.renditions)
    table = score_study(
        votes,
        renditions,
        top_fraction=args.top_voters,
        mode=args.mode,
        half_credit_same=args.same_half_credit,
    )
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "scores.json").write_text(
            json.dumps(table.to_dict(), indent=2), encoding="utf-8"
        )
    print(json.dumps(table.to_dict(), indent=2))
    if args.efficiency or args.times:
        if not args.times:
            print("score: --efficiency needs --times", file=sys.stderr)
            return 1
        entries = leaderboard(table, load_times(args.times))
        print(format_leaderboards(entries))
        if out_dir:
            (out_dir / "leaderboard.json").write_text(
                json.dumps([e.to_dict() for e in entries], indent=2), encoding="utf-8"
            )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.images)
    server = make_server(
        manifest,
        VoteStore(args.store),
        port=args.port,
        honeypot_rate=args.honeypot_rate,
        seed=args.seed,
        top_fraction=args.top_voters,
        ui_dir=args.ui_dir,
        host=args.host,
    )
    print(f"study service on http://{args.host}:{server.server_port} "
          f"({len(manifest)} renditions, store {args.store})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nightisp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render raw frames through a pipeline preset")
    p.add_argument("inputs", nargs="+", help="raw PNG files or globs (sidecar: same stem .json)")
    p.add_argument("--preset", default="baseline", help="preset name or pipeline spec path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=_parse_size, default=None, help="output canvas, e.g. 1024x768")
    p.add_argument("--gain-map", default=None, help="calibration gain map (.npz)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(fn=_cmd_render)

    p = sub.add_parser("bench", help="time a pipeline per stage, decode/encode excluded")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--preset", default="baseline")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gain-map", default=None)
    p.add_argument("--parallel", action="store_true", help="overlap distinct images (throughput)")
    p.add_argument("--timing-strict", action="store_true",
                   help="force one-at-a-time execution for honest timing")
    p.add_argument("--json", default=None, help="also write the summary as JSON")
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("calibrate", help="build a lens-shading gain map from white frames")
    p.add_argument("white_frames", nargs="+")
    p.add_argument("--out", required=True, help="output gain map path (.npz)")
    p.add_argument("--sigma", type=float, default=16.0, help="calibration smoothing sigma (px)")
    p.add_argument("--cap", type=float, default=4.0, help="gain cap")
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("score", help="score a vote store and print leaderboards")
    p.add_argument("--votes", required=True, help="vote store (JSON lines)")
    p.add_argument("--renditions", required=True, help="rendition manifest (JSON)")
    p.add_argument("--times", default=None, help="solution -> seconds map (JSON)")
    p.add_argument("--top-voters", type=float, default=1.0, help="best-voter fraction to keep")
    p.add_argument("--efficiency", action="store_true", help="print the efficiency re-ranking")
    p.add_argument("--mode", choices=("literal", "observed"), default="literal")
    p.add_argument("--same-half-credit", action="store_true",
                   help="credit 0.5 to each side for a 'same' answer")
    p.add_argument("--out", default=None, help="directory for scores.json / leaderboard.json")
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("serve", help="run the pairwise study HTTP service")
    p.add_argument("--images", required=True, help="rendition manifest (JSON)")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--honeypot-rate", type=float, default=0.1)
    p.add_argument("--store", default="votes.jsonl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-voters", type=float, default=1.0)
    p.add_argument("--ui-dir", default=None, help="serve the voting frontend from this directory")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NightIspError as exc:
        print(f"nightisp {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
