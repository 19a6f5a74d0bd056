"""Command-line front end: voxelize | reconstruct | metrics | morph | bench.

Exit codes: 0 on success, 1 on usage errors (bad flags, unparseable
values), 2 on data errors (missing or malformed files, degenerate
geometry, diverged optimization).  Everything the CLI writes parses back
through the library loaders losslessly.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import format_report, run_benchmark
from .errors import DegenerateError, DivergedError, OnSurfaceError, ParseError
from .mesh_io import load_mesh, normalize_to_unit_cube, save_mesh
from .metrics import evaluate_reconstruction
from .morph import MorphConfig, morph
from .openmesh import flipped_duplication
from .recon import laplacian_smooth, marching_cubes
from .winding import GridSpec, QueryBatchConfig, load_field, save_field, voxelize

_DATA_ERRORS = (ParseError, DegenerateError, OnSurfaceError, DivergedError,
                OSError, IndexError)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems by default; the contract here is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _resolution(text: str) -> tuple[int, int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad resolution {text!r}")
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"bad resolution {text!r}")
    return tuple(parts)


def _bounds(text: str):
    if text == "auto":
        return "auto"
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bounds {text!r} (use auto or LO,HI)")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"bounds must satisfy LO < HI, got {text!r}")
    return (lo, hi)


def _resolution_list(text: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad resolution list {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"bad resolution list {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="windvox",
                     description="Winding-number voxelization and friends")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("voxelize", help="mesh -> occupancy grid (WVOX1)")
    p.add_argument("mesh", help="input OBJ/STL")
    p.add_argument("--resolution", type=_resolution, default=(128, 128, 128),
                   metavar="R|RX,RY,RZ", help="grid nodes per axis (default 128)")
    p.add_argument("--bounds", type=_bounds, default="auto", metavar="auto|LO,HI",
                   help="auto: normalize mesh and grid [-1,1]^3; LO,HI: fixed cube")
    p.add_argument("--mode", choices=("exact", "soft"), default="exact")
    p.add_argument("--flip-duplicate", action="store_true",
                   help="close an open mesh by offset flipped duplication first")
    p.add_argument("--epsilon", type=float, default=0.01,
                   help="flip-duplication offset (default 0.01)")
    p.add_argument("--chunk", type=int, default=2000, help="query batch size")
    p.add_argument("--precision", choices=("f64", "f32"), default="f64")
    p.add_argument("--out", required=True, help="output .wvox path")

    p = sub.add_parser("reconstruct", help="occupancy grid -> mesh")
    p.add_argument("field", help="input .wvox")
    p.add_argument("mesh_out", help="output OBJ/STL")
    p.add_argument("--iso", type=float, default=0.5)
    p.add_argument("--smooth-lambda", type=float, default=0.15)
    p.add_argument("--smooth-iters", type=int, default=10)

    p = sub.add_parser("metrics", help="sampled Chamfer/Hausdorff between meshes")
    p.add_argument("original")
    p.add_argument("reconstructed")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("morph", help="fit a template mesh to a target field")
    p.add_argument("template", help="template OBJ/STL")
    p.add_argument("target", help="target .wvox")
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--smooth", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="morphed mesh path")
    p.add_argument("--report", help="optional JSON loss-trace path")

    p = sub.add_parser("bench", help="corpus benchmark")
    p.add_argument("--corpus", required=True, help="directory of OBJ/STL meshes")
    p.add_argument("--resolutions", type=_resolution_list, default=[32, 64, 128, 256],
                   metavar="R,R,...")
    p.add_argument("--out", required=True, help="JSON report path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"windvox: {exc}\n")
        return 2


def _dispatch(args) -> int:
    if args.command == "voxelize":
        mesh = load_mesh(args.mesh)
        if args.bounds == "auto":
            mesh, _ = normalize_to_unit_cube(mesh)
            lo, hi = -1.0, 1.0
        else:
            lo, hi = args.bounds
        if args.flip_duplicate:
            mesh = flipped_duplication(mesh, epsilon=args.epsilon)
        spec = GridSpec(bounds_min=(lo,) * 3, bounds_max=(hi,) * 3,
                        resolution=args.resolution)
        field = voxelize(mesh, spec, mode=args.mode,
                         batch=QueryBatchConfig(chunk_size=args.chunk),
                         precision=args.precision)
        save_field(field, args.out)
    elif args.command == "reconstruct":
        field = load_field(args.field)
        mesh = marching_cubes(field, iso=args.iso)
        mesh = laplacian_smooth(mesh, lam=args.smooth_lambda,
                                iterations=args.smooth_iters)
        save_mesh(mesh, args.mesh_out)
    elif args.command == "metrics":
        report = evaluate_reconstruction(
            load_mesh(args.original), load_mesh(args.reconstructed),
            n=args.samples, repeats=args.repeats, seed=args.seed)
        print(json.dumps(report, indent=2))
    elif args.command == "morph":
        cfg = MorphConfig(step_size=args.step, momentum=args.momentum,
                          iterations=args.iters, smooth_weight=args.smooth)
        morphed, report = morph(load_mesh(args.template),
                                load_field(args.target), cfg)
        save_mesh(morphed, args.out)
        report.final_mesh_path = args.out
        if args.report:
            payload = {"entries": report.entries,
                       "final_mesh_path": report.final_mesh_path}
            with open(args.report, "w") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
    elif args.command == "bench":
        report = run_benchmark(args.corpus, args.resolutions, out_report=args.out)
        print(format_report(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
