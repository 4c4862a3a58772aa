"""Command-line interface.

    pointbrush info <dir>
    pointbrush gen <scene.json> <dir> --frames N --seed S [--labels first|all|none]
    pointbrush propagate <dir> --from A --to B [--mode spatial|color] [--report out.json]
    pointbrush serve <dir> [--port P]
    pointbrush export <dir> [--format json] [--out out.json]
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .frameio import load_sequence, write_mask
from .propagation import PropagationParams
from .session import open_session, save_session
from .synthetic import SceneSpec, generate_synthetic_sequence

DEFAULT_PORT = 8765


def _cmd_info(args) -> int:
    seq = load_sequence(args.directory)
    counts = seq.point_counts
    print(f"directory:   {seq.directory}")
    print(f"frames:      {len(seq)}")
    print(f"fps:         {seq.nominal_fps:g}")
    print(f"points:      min {min(counts)}, max {max(counts)}, total {sum(counts)}")
    session = open_session(args.directory)
    labeled = sorted({int(l) for m in session.masks.values() for l in np.unique(m) if l})
    print(f"mask files:  {len(session.masks)}")
    print(f"labels used: {labeled if labeled else 'none'}")
    return 0


def _cmd_gen(args) -> int:
    scene = SceneSpec.from_dict(json.loads(Path(args.scene).read_text(encoding="utf-8")))
    result = generate_synthetic_sequence(scene, args.frames, args.seed, args.directory)
    out = Path(args.directory)
    if args.labels != "none":
        frames = range(len(result.sequence)) if args.labels == "all" else [0]
        for i in frames:
            path = out / result.sequence.frames[i].mask_name
            path.write_bytes(write_mask(result.masks[i]))
    print(f"wrote {len(result.sequence)} frames to {out}")
    return 0


def _apply_param_overrides(session, args):
    """Fold --assign-radius / ICP flags into the session's propagation params."""
    params = session.params.to_dict()
    if args.assign_radius is not None:
        params["assign_radius"] = args.assign_radius
    if args.max_corr_dist is not None:
        params["icp"]["max_correspondence_distance"] = args.max_corr_dist
    if args.max_iterations is not None:
        params["icp"]["max_iterations"] = args.max_iterations
    if args.k_neighbors is not None:
        params["icp"]["k_neighbors"] = args.k_neighbors
    if args.seed is not None:
        params["icp"]["seed"] = args.seed
    session.params = PropagationParams.from_dict(params)


def _cmd_propagate(args) -> int:
    session = open_session(args.directory)
    _apply_param_overrides(session, args)
    reports = session.run_propagation(args.from_, args.to, mode=args.mode)
    save_session(session)
    for report in reports:
        for r in report.labels:
            status = "FAILED " + (r.reason or "") if r.failed else (
                f"rmse {r.icp.final_rmse:.2e}, {r.icp.iterations_run} iters, "
                f"{r.transferred} transferred, {r.lost} lost"
            )
            print(f"frame {report.frame_from} -> {report.frame_to}  label {r.label}: {status}")
    if args.report:
        payload = [r.to_dict() for r in reports]
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"report written to {args.report}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    session = open_session(args.directory)
    _apply_param_overrides(session, args)
    app = create_app(session, save_dir=Path(args.directory))
    port = args.port or int(os.environ.get("POINTBRUSH_PORT", DEFAULT_PORT))
    uvicorn.run(app, host=args.host, port=port)
    return 0


def _cmd_export(args) -> int:
    if args.format != "json":
        print(f"unsupported export format: {args.format}", file=sys.stderr)
        return 2
    session = open_session(args.directory)
    frames = []
    for i, ref in enumerate(session.sequence.frames):
        labels = session.masks[i].tolist() if i in session.masks else None
        frames.append({"frame": ref.name, "point_count": ref.point_count, "labels": labels})
    payload = {
        "directory": str(session.directory),
        "fps": session.sequence.nominal_fps,
        "palette": session.palette.to_list(),
        "frames": frames,
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"exported to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointbrush", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="summarize a sequence directory")
    p.add_argument("directory")
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("gen", help="generate a synthetic sequence from a scene spec")
    p.add_argument("scene", help="scene spec JSON file")
    p.add_argument("directory", help="output directory")
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--labels",
        choices=("first", "all", "none"),
        default="first",
        help="which frames get ground-truth .lbl sidecars (default: first)",
    )
    p.set_defaults(func=_cmd_gen)

    def add_param_flags(p):
        p.add_argument("--assign-radius", type=float, default=None,
                       help="label transfer radius in meters (default 0.02)")
        p.add_argument("--max-corr-dist", type=float, default=None,
                       help="ICP correspondence gate in meters (default 0.1)")
        p.add_argument("--max-iterations", type=int, default=None)
        p.add_argument("--k-neighbors", type=int, default=None,
                       help="color-mode neighbor count (default 8)")
        p.add_argument("--seed", type=int, default=None, dest="seed",
                       help="subsampling seed")

    p = sub.add_parser("propagate", help="track labels across a frame range")
    p.add_argument("directory")
    p.add_argument("--from", dest="from_", type=int, required=True)
    p.add_argument("--to", dest="to", type=int, required=True)
    p.add_argument("--mode", choices=("spatial", "color"), default=None)
    p.add_argument("--report", help="write per-label JSON report here")
    add_param_flags(p)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("serve", help="serve the labeling API for the browser UI")
    p.add_argument("directory")
    p.add_argument("--port", type=int, default=None, help="default: $POINTBRUSH_PORT or 8765")
    p.add_argument("--host", default="127.0.0.1")
    add_param_flags(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("export", help="dump masks as JSON for downstream tools")
    p.add_argument("directory")
    p.add_argument("--format", default="json")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
