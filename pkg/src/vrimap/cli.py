"""Command-line entry point.

One subcommand per pipeline stage plus `serve`.  A subcommand runs
exactly its own stage against the artifact directory; earlier stages'
outputs must already be there (or be requested together via --stages).

    vrimap fit      --config project.yaml --out out/
    vrimap assess   --config project.yaml --out out/ --stages fit,simulate,map,assess
    vrimap render   --config project.yaml --out out/ --timestep 40
    vrimap serve    --config project.yaml --out out/ --port 8000
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from vrimap.config import load_config
from vrimap.pipeline import (
    PipelineError,
    STAGE_ORDER,
    build_snapshot,
    run_pipeline,
)
from vrimap.vri import VRIWeights

_STAGE_COMMANDS = STAGE_ORDER  # fit, simulate, map, assess, render


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="project YAML")
    parser.add_argument("--out", default="out", help="artifact directory (default: out)")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--weights",
        default=None,
        metavar="qd,qa,qb",
        help="override default aspect weights (unnormalized, comma-separated)",
    )
    parser.add_argument(
        "--timestep", type=int, default=None, metavar="T", help="single step 0-95"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrimap",
        description="Spatial-temporal community electricity vulnerability mapping",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in _STAGE_COMMANDS:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_common(p)
        p.add_argument(
            "--stages",
            default=None,
            help="comma-separated stages to run instead (or 'all')",
        )
    p = sub.add_parser("serve", help="serve the assessed scenario over HTTP")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _apply_overrides(config, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.weights is not None:
        parts = args.weights.split(",")
        if len(parts) != 3:
            raise SystemExit(f"--weights expects qd,qa,qb, got {args.weights!r}")
        try:
            qd, qa, qb = (float(p) for p in parts)
        except ValueError:
            raise SystemExit(f"--weights values must be numbers, got {args.weights!r}")
        changes["weights"] = VRIWeights.normalized(qd, qa, qb)
    return dataclasses.replace(config, **changes) if changes else config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = _apply_overrides(load_config(args.config), args)
    out_dir = Path(args.out)

    try:
        if args.command == "serve":
            snapshot = build_snapshot(config, out_dir)
            from vrimap.service import serve

            print(f"serving scenario {snapshot.content_hash[:12]} on {args.host}:{args.port}")
            serve(snapshot, host=args.host, port=args.port)
            return 0

        if args.command == "render" and args.timestep is not None:
            return _render_single(config, out_dir, args.timestep)

        stages = [args.command]
        if getattr(args, "stages", None):
            if args.stages == "all":
                stages = list(STAGE_ORDER)
            else:
                stages = [s.strip() for s in args.stages.split(",") if s.strip()]
        run_pipeline(config, stages, out_dir)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"completed stages: {', '.join(s for s in STAGE_ORDER if s in stages)}")
    print(f"artifacts in {out_dir}")
    return 0


def _render_single(config, out_dir: Path, t: int) -> int:
    from vrimap.render import write_png
    from vrimap.pipeline import _Context

    if not 0 <= t < 96:
        print(f"error: --timestep {t} outside 0-95", file=sys.stderr)
        return 2
    try:
        ctx = _Context(config, out_dir)
        assessment = ctx.assessment()
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    png_dir = out_dir / "png"
    png_dir.mkdir(parents=True, exist_ok=True)
    settings = config.render
    path = png_dir / f"frame_t{t:02d}.png"
    write_png(assessment.frame(t), path, settings.ramp, settings.scale)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
