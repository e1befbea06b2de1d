"""``polarct`` command line: phantom -> project -> reconstruct -> map -> metrics, plus bench.

Exit status is 0 on success, 1 for bad input (flags, files, parameters) and
2 when the solver fails numerically.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__, fileio
from ._backend import BACKEND
from .errors import InputError, NumericalError
from .grid import MODE_2D, MODE_3D, GridSpec, to_cartesian
from .phantom import (BINARY, KINDS, LENGTH_WEIGHTED, PhantomSpec, generate_phantom,
                      generate_projections, load_table_file)
from .scan import CONE_RADIUS, FAN_RADIUS, ScanGeometry
from .solver import ZERO_DAMP, ZERO_SKIP, ProjectionSet, SolverConfig, reconstruct

log = logging.getLogger("polarct")

# per-mode defaults of the reference fan and cone set-ups
FAN_DEFAULTS = {"source_distance": 8.0, "detector_distance": 8.0, "views": 50, "radius": FAN_RADIUS}
CONE_DEFAULTS = {"source_distance": 3.0, "detector_distance": 10.0, "views": 70,
                 "radius": CONE_RADIUS}


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Every parameter of one invocation; echoed into each output sidecar."""

    command: str
    seed: int = 0
    threads: int = 1
    paths: dict = dc_field(default_factory=dict)
    params: dict = dc_field(default_factory=dict)

    def meta(self) -> dict:
        out = {"tool": f"polarct {__version__}", "backend": BACKEND, "command": self.command,
               "seed": self.seed, "threads": self.threads}
        out.update({f"path.{k}": v for k, v in self.paths.items()})
        out.update(self.params)
        return out


def _grid_from_meta(meta: dict, source: str) -> GridSpec:
    try:
        return GridSpec(int(meta["grid.N"]), float(meta["grid.r"]), float(meta["grid.h"]),
                        meta["grid.mode"])
    except KeyError as exc:
        raise InputError(f"{source}: sidecar lacks grid metadata ({exc.args[0]})") from None
    except ValueError as exc:
        raise InputError(f"{source}: bad grid metadata: {exc}") from None


def _grid_meta(spec: GridSpec) -> dict:
    return {f"grid.{k}": v for k, v in spec.describe().items()}


def _geom_meta(geom: ScanGeometry) -> dict:
    return {f"geometry.{k}": v for k, v in geom.describe().items()}


def _geom_from_meta(meta: dict, source: str) -> ScanGeometry:
    try:
        return ScanGeometry(
            tuple(float(c) for c in meta["geometry.source"].split(",")),
            tuple(float(c) for c in meta["geometry.detector_center"].split(",")),
            int(meta["geometry.n_u"]), float(meta["geometry.du"]),
            int(meta["geometry.n_views"]), int(meta["geometry.n_v"]),
            float(meta["geometry.dv"]))
    except KeyError as exc:
        raise InputError(f"{source}: sidecar lacks geometry metadata ({exc.args[0]})") from None
    except ValueError as exc:
        raise InputError(f"{source}: bad geometry metadata: {exc}") from None


def cmd_phantom(args, rc: RunConfig) -> int:
    mode = MODE_3D if args.kind == "shepp-logan-3d" else MODE_2D
    if args.kind == "raw-volume":
        if not args.volume:
            raise InputError("--volume is required for raw-volume phantoms")
        volume, _ = fileio.read_raster(args.volume)
        mode = MODE_3D if volume.ndim == 3 else MODE_2D
        if args.n is None:
            args.n = volume.shape[-1]
    else:
        volume = None
    if args.n is None:
        args.n = 128 if mode == MODE_2D else 64
    defaults = CONE_DEFAULTS if mode == MODE_3D else FAN_DEFAULTS
    radius = args.radius if args.radius is not None else defaults["radius"]
    if args.n < 2 or args.n % 2:
        raise InputError(f"--n must be an even integer >= 2, got {args.n}")
    r = radius / (args.n // 2)
    spec = GridSpec(args.n, r, args.h if args.h is not None else r, mode)
    table = load_table_file(args.table) if args.table else None
    ph = generate_phantom(PhantomSpec(args.kind, table=table, volume=volume), spec)

    rc.params.update(_grid_meta(spec))
    rc.params.update({"phantom.kind": args.kind, "phantom.table": args.table or "builtin",
                      "phantom.clipped": ph.clipped})
    out = Path(args.out)
    companion = Path(args.companion) if args.companion else out.with_suffix(".img")
    rc.paths.update({"field": str(out), "companion": str(companion)})
    if args.pixel_companion:
        rc.paths["pixel_companion"] = args.pixel_companion
    meta = rc.meta()
    fileio.write_field(out, ph.field, spec.n_slices, meta)
    fileio.write_raster(companion, to_cartesian(ph.field, spec),
                        dict(meta, content="phantom field in Cartesian cell order"))
    if args.pixel_companion:
        fileio.write_raster(args.pixel_companion, ph.cartesian,
                            dict(meta, content="phantom sampled at pixel centres"))
    if ph.clipped:
        log.warning("negative phantom values were clipped to zero")
    print(f"wrote {out} ({spec.n_grids} cells) and {companion}")
    return 0


def cmd_project(args, rc: RunConfig) -> int:
    field, fmeta = fileio.read_field(args.field)
    spec = _grid_from_meta(fmeta, args.field)
    if field.size != spec.n_grids:
        raise InputError(f"{args.field}: {field.size} values do not fit grid of {spec.n_grids}")
    defaults = CONE_DEFAULTS if spec.is_3d else FAN_DEFAULTS
    views = args.views if args.views is not None else defaults["views"]
    sd = args.source_distance if args.source_distance is not None else defaults["source_distance"]
    dd = (args.detector_distance if args.detector_distance is not None
          else defaults["detector_distance"])
    n_v = args.detectors if spec.is_3d else 1
    geom = ScanGeometry((-sd, 0.0, 0.0), (dd, 0.0, 0.0), args.detectors, args.spacing, views,
                        n_v=n_v, dv=args.spacing if spec.is_3d else 0.0)
    proj = generate_projections(field.astype(np.float64), geom, spec, model=args.model,
                                threads=args.threads)
    rc.params.update(_grid_meta(spec))
    rc.params.update(_geom_meta(geom))
    rc.params["projection.model"] = args.model
    rc.paths.update({"field": args.field, "projections": args.out})
    fileio.write_projections(args.out, proj.data, geom.n_u, geom.n_v, rc.meta())
    print(f"wrote {args.out} ({geom.n_views} views x {geom.n_lines} lines)")
    return 0


def cmd_reconstruct(args, rc: RunConfig) -> int:
    data, pmeta = fileio.read_projections(args.proj)
    spec = _grid_from_meta(pmeta, args.proj)
    geom = _geom_from_meta(pmeta, args.proj)
    cfg = SolverConfig(beta=args.beta, tol=args.tol, max_sweeps=args.max_sweeps,
                       f_init=args.f_init, zero_lines=args.zero_lines)
    proj = ProjectionSet(geom, data)
    field, report = reconstruct(proj, spec, cfg)
    rc.params.update(_grid_meta(spec))
    rc.params.update(_geom_meta(geom))
    rc.params.update({f"solver.{k}": v for k, v in asdict(cfg).items()})
    report_path = args.report or f"{args.out}.report"
    rc.paths.update({"projections": args.proj, "field": args.out, "report": report_path})
    meta = rc.meta()
    fileio.write_field(args.out, field, spec.n_slices, meta)
    rep = dict(meta)
    rep.update({f"report.{k}": v for k, v in report.as_dict().items()})
    fileio.atomic_write(report_path, "".join(f"{k} = {v}\n" for k, v in rep.items()).encode())
    state = "converged" if report.converged else "stopped at max sweeps"
    print(f"wrote {args.out}: {report.sweeps} sweeps, {state}, "
          f"last change {report.residuals[-1] if report.residuals else 0.0:.3e}")
    return 0


def cmd_map(args, rc: RunConfig) -> int:
    field, fmeta = fileio.read_field(args.field)
    spec = _grid_from_meta(fmeta, args.field)
    image = to_cartesian(field, spec)
    rc.params.update(_grid_meta(spec))
    rc.paths.update({"field": args.field, "raster": args.out})
    meta = rc.meta()
    fileio.write_raster(args.out, image, meta)
    if args.pgm:
        lo = args.window[0] if args.window else None
        hi = args.window[1] if args.window else None
        paths = fileio.export_pgm(args.pgm, image, lo, hi, meta)
        print(f"wrote {len(paths)} PGM slice(s) with stem {args.pgm}")
    print(f"wrote {args.out} {image.shape}")
    return 0


def cmd_metrics(args, rc: RunConfig) -> int:
    from . import metrics

    ref, _ = fileio.read_raster(args.ref)
    test, _ = fileio.read_raster(args.test)
    rep = metrics.report(ref, test, args.data_range)
    if args.row is not None:
        img = ref if ref.ndim == 2 else ref[ref.shape[0] // 2]
        timg = test if test.ndim == 2 else test[test.shape[0] // 2]
        rep["profile.row"] = args.row
        rep["profile.ref"] = ",".join(f"{v:.6g}" for v in metrics.intensity_profile(img, args.row))
        rep["profile.test"] = ",".join(f"{v:.6g}" for v in metrics.intensity_profile(timg, args.row))
    rc.paths.update({"ref": args.ref, "test": args.test})
    text = "".join(f"{k} = {v}\n" for k, v in rep.items())
    if args.out:
        rc.paths["report"] = args.out
        full = rc.meta()
        full.update(rep)
        fileio.atomic_write(args.out, "".join(f"{k} = {v}\n" for k, v in full.items()).encode())
    sys.stdout.write(text)
    return 0


def cmd_bench(args, rc: RunConfig) -> int:
    from .bench import bench_compare

    rep = bench_compare(sizes=tuple(args.sizes), p_values=tuple(args.views), sweeps=args.sweeps,
                        repeats=args.repeats)
    rc.params.update({"bench.sizes": ",".join(map(str, args.sizes)),
                      "bench.views": ",".join(map(str, args.views)), "bench.sweeps": args.sweeps})
    text = "".join(f"{k} = {v}\n" for k, v in rep.items())
    if args.out:
        rc.paths["report"] = args.out
        full = rc.meta()
        full.update(rep)
        fileio.atomic_write(args.out, "".join(f"{k} = {v}\n" for k, v in full.items()).encode())
    sys.stdout.write(text)
    return 0


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads for projection")
    common.add_argument("--seed", type=int, default=0, help="seed recorded with every output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="polarct", description="Polar/cylindrical grid CT toolkit.")
    p.add_argument("--version", action="version", version=f"polarct {__version__} ({BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ph = sub.add_parser("phantom", parents=[common], help="write a phantom field")
    ph.add_argument("--kind", choices=KINDS, default="shepp-logan-2d")
    ph.add_argument("--n", type=int, default=None, help="grid size N (even)")
    ph.add_argument("--radius", type=float, default=None, help="outer grid radius")
    ph.add_argument("--h", type=float, default=None, help="slice thickness (3D)")
    ph.add_argument("--table", help="CSV ellipse/ellipsoid table replacing the built-in one")
    ph.add_argument("--volume", help="raster file for raw-volume phantoms")
    ph.add_argument("--out", required=True)
    ph.add_argument("--companion", help="Cartesian raster of the field (default OUT with .img)")
    ph.add_argument("--pixel-companion", help="also write the phantom sampled at pixel centres")
    ph.set_defaults(func=cmd_phantom)

    pr = sub.add_parser("project", parents=[common], help="simulate projections of a field")
    pr.add_argument("--field", required=True)
    pr.add_argument("--views", type=int, default=None)
    pr.add_argument("--detectors", type=int, default=101, help="elements per panel row")
    pr.add_argument("--spacing", type=float, default=0.05)
    pr.add_argument("--source-distance", type=float, default=None)
    pr.add_argument("--detector-distance", type=float, default=None)
    pr.add_argument("--model", choices=(BINARY, LENGTH_WEIGHTED), default=BINARY)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_project)

    rc = sub.add_parser("reconstruct", parents=[common], help="run Sp-MART")
    rc.add_argument("--proj", required=True)
    rc.add_argument("--beta", type=float, default=0.4)
    rc.add_argument("--tol", "-e", type=float, default=1e-4)
    rc.add_argument("--max-sweeps", type=int, default=30)
    rc.add_argument("--f-init", type=float, default=1.0)
    rc.add_argument("--zero-lines", choices=(ZERO_DAMP, ZERO_SKIP), default=ZERO_DAMP)
    rc.add_argument("--out", required=True)
    rc.add_argument("--report", help="report path (default OUT.report)")
    rc.set_defaults(func=cmd_reconstruct)

    mp = sub.add_parser("map", parents=[common], help="polar field to Cartesian raster")
    mp.add_argument("--field", required=True)
    mp.add_argument("--out", required=True)
    mp.add_argument("--pgm", help="stem for 16-bit PGM slices")
    mp.add_argument("--window", type=float, nargs=2, metavar=("MIN", "MAX"))
    mp.set_defaults(func=cmd_map)

    me = sub.add_parser("metrics", parents=[common], help="compare two rasters")
    me.add_argument("--ref", required=True)
    me.add_argument("--test", required=True)
    me.add_argument("--data-range", type=float, default=None)
    me.add_argument("--row", type=int, default=None, help="also print this intensity profile")
    me.add_argument("--out")
    me.set_defaults(func=cmd_metrics)

    be = sub.add_parser("bench", parents=[common], help="polar vs Cartesian timing and storage")
    be.add_argument("--sizes", type=_int_list, default=[128, 256])
    be.add_argument("--views", type=_int_list, default=[10, 50, 100])
    be.add_argument("--sweeps", type=int, default=10)
    be.add_argument("--repeats", type=int, default=1)
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="polarct: %(message)s")
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        rc = RunConfig(args.command, seed=args.seed, threads=args.threads)
        return args.func(args, rc)
    except NumericalError as exc:
        print(f"polarct: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"polarct: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
