"""Command-line driver: conformal-tiling <subcommand> [options].

Every subcommand accepts ``--config FILE`` with ``key = value`` lines using
the option names (dashes or underscores); command-line flags win over the
file. Exit status is 0 on success, 1 when a computation fails on its inputs
and 2 on usage errors.
"""

import argparse
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import assembly, discrete_conformal, export, goldilocks, patch_mesher, torus, triangle_groups
from .errors import DomainError

log = logging.getLogger("conformal_tiling")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def versions():
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"artifact": own, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


class StageError(DomainError):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except DomainError as exc:
        raise StageError(name, exc) from exc


def _finish(args, report):
    report = dict(report)
    report["config"] = _config_echo(args)
    report["versions"] = versions()
    if getattr(args, "report_out", None):
        export.write_report(report, args.report_out)
    summary = {k: v for k, v in report.items() if not isinstance(v, (dict, list))}
    print(json.dumps(export._jsonable(summary), sort_keys=True))
    return 0


def _config_echo(args):
    skip = {"func", "config", "log_level"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}


# subcommands ----------------------------------------------------------------

def cmd_mesh_patch(args):
    patch = _stage("mesh_patch", patch_mesher.mesh_patch, args.c, args.resolution)
    quality = patch_mesher.mesh_quality(patch)
    if args.out:
        export.write_patch_ply(patch, args.out, args.ply_mode)
    return _finish(args, {"c": patch.c, "corners": patch.corners, "quality": quality.to_dict(), "info": patch.info})


def _load_patch(args):
    if args.in_patch:
        return _stage("read_patch", export.read_patch_ply, args.in_patch)
    return _stage("mesh_patch", patch_mesher.mesh_patch, args.c, args.resolution)


def cmd_flatten(args):
    patch = _load_patch(args)
    flat = _stage("flatten", discrete_conformal.flatten, patch, tol=args.tol)
    report = flat.report()
    if args.svg_out:
        tiles = _stage("tile_quad", discrete_conformal.tile_quad, patch, flat)
        discrete_conformal.export_layout_svg(flat, args.svg_out, tiles)
        report["tile_face_counts"] = {str(k): v for k, v in tiles.counts().items()}
    return _finish(args, report)


def cmd_search_cstar(args):
    rep = _stage(
        "search_cstar", goldilocks.solve_cstar,
        (args.bracket_lo, args.bracket_hi), args.c_tol, args.resolution,
    )
    return _finish(args, rep.to_dict())


def cmd_assemble(args):
    patch = _stage("mesh_patch", patch_mesher.mesh_patch, args.c, args.resolution)
    flat = _stage("flatten", discrete_conformal.flatten, patch)
    tiles = _stage("tile_quad", discrete_conformal.tile_quad, patch, flat)
    surface = _stage("assemble", assembly.assemble, patch, tiles)
    if args.ply_out:
        export.write_ply(surface, args.ply_out, args.ply_mode)
    if args.obj_out:
        export.write_obj(surface, args.obj_out)
    report = surface.summary()
    report["c"] = patch.c
    report["hyperbolic_area"] = 48.0 * flat.total_area()
    return _finish(args, report)


def cmd_tiling(args):
    sig = _stage("signature", triangle_groups.Signature, args.p, args.q, args.r)
    tiling = _stage("generate_tiling", triangle_groups.generate_tiling, sig, args.depth)
    report = {"signature": [sig.p, sig.q, sig.r], "geometry": tiling.geometry, "depth": args.depth, "tiles": len(tiling)}
    if args.rings:
        counts = triangle_groups.ring_counts(tiling)
        report["ring_counts"] = counts
        report["growth_ratios"] = triangle_groups.growth_ratios(counts).tolist()
    if args.svg_out:
        triangle_groups.export_tiling_svg(tiling, args.svg_out)
    return _finish(args, report)


def cmd_torus(args):
    if args.solve_square:
        spec = _stage("solve_square_torus", torus.solve_square_torus, args.r)
    else:
        spec = _stage("torus_spec", torus.TorusSpec, args.R, args.r)
    report = _stage("torus_report", torus.torus_report, spec)
    if args.ply_out:
        tiled = _stage("tile_torus", torus.tile_torus, spec, args.n)
        export.write_ply(tiled.mesh, args.ply_out, args.ply_mode, colors=tiled.color)
        report["mesh_faces"] = tiled.mesh.n_faces
    return _finish(args, report)


# parser ---------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="conformal-tiling", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="key = value file; flags override it")
        p.set_defaults(func=func)
        return p

    res = dict(type=float, default=patch_mesher.DEFAULT_EDGE_LENGTH, help="target edge length")
    ply_mode = dict(choices=["ascii", "binary"], default="binary")

    p = add("mesh-patch", cmd_mesh_patch, "triangulate the symmetry patch Q(c)")
    p.add_argument("--c", type=float, default=-0.2411)
    p.add_argument("--resolution", **res)
    p.add_argument("--out", type=Path)
    p.add_argument("--ply-mode", **ply_mode)
    p.add_argument("--report-out", type=Path)

    p = add("flatten", cmd_flatten, "flatten Q(c) into the hyperbolic plane")
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--in-patch", type=Path)
    p.add_argument("--resolution", **res)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--svg-out", type=Path)
    p.add_argument("--report-out", type=Path)

    p = add("search-cstar", cmd_search_cstar, "bisection for the just-right contour value")
    p.add_argument("--bracket-lo", type=float, default=goldilocks.DEFAULT_BRACKET[0])
    p.add_argument("--bracket-hi", type=float, default=goldilocks.DEFAULT_BRACKET[1])
    p.add_argument("--c-tol", type=float, default=goldilocks.DEFAULT_C_TOL)
    p.add_argument("--resolution", **res)
    p.add_argument("--report-out", type=Path)

    p = add("assemble", cmd_assemble, "build the closed tiled surface")
    p.add_argument("--c", type=float, default=-0.2411)
    p.add_argument("--resolution", **res)
    p.add_argument("--ply-out", type=Path)
    p.add_argument("--ply-mode", **ply_mode)
    p.add_argument("--obj-out", type=Path)
    p.add_argument("--report-out", type=Path)

    p = add("tiling", cmd_tiling, "(p,q,r) triangle-group tiling")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--r", type=int, default=6)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--svg-out", type=Path)
    p.add_argument("--rings", action="store_true")
    p.add_argument("--report-out", type=Path)

    p = add("torus", cmd_torus, "torus modulus, Villarceau angle and tiling")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--solve-square", action="store_true")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--ply-out", type=Path)
    p.add_argument("--ply-mode", **ply_mode)
    p.add_argument("--report-out", type=Path)
    return parser


def _read_config(path):
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, subparser, argv, config):
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in config.items():
        if key not in actions:
            parser.error(f"unknown config key {key!r}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in _TRUE | _FALSE:
                parser.error(f"config key {key!r} expects a boolean")
            defaults[key] = raw.lower() in _TRUE
            continue
        try:
            value = action.type(raw) if action.type else raw
        except (TypeError, ValueError):
            parser.error(f"config key {key!r}: invalid value {raw!r}")
        if action.choices and value not in action.choices:
            parser.error(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
        defaults[key] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def parse_args(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            config = _read_config(args.config)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config: {exc}")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        args = _apply_config(parser, subparser, argv, config)
    if args.command == "flatten" and (args.c is None) == (args.in_patch is None):
        parser.error("flatten needs exactly one of --c and --in-patch")
    if args.command == "torus" and (args.R is None) == (not args.solve_square):
        parser.error("torus needs exactly one of --R and --solve-square")
    return args


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return args.func(args)
    except DomainError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
