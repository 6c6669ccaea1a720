"""Command-line interface.

Exit status is 0 on success, 2 for invalid input (arguments, files,
geometry) and 1 for any other failure.  Results go to standard output and
diagnostics to standard error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .forward import NoiseSpec, add_noise, forward_2d, forward_3d, forward_linedet
from .io import FormatError, read_image, read_scan, read_series, write_image, write_pgm, write_scan, write_series
from .linedet import reconstruct_linedet
from .metrics import PIPELINES, rel_l2_error, scaling_probe
from .model import DetectorRing, DetectorSphere, LineDetectorGeometry, SquareBoundary, TimeGrid, load_phantom
from .recon2d import reconstruct_2d
from .recon3d import reconstruct_3d
from .timereversal import forward_square_boundary, time_reverse_2d

log = logging.getLogger("tatrecon")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sizes(text: str) -> list:
    try:
        out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid size list {text!r}") from exc
    if not out or min(out) < 3:
        raise argparse.ArgumentTypeError("sizes must be integers >= 3")
    return out


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tatrecon", description="Thermoacoustic tomography reconstruction toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate detector data for a phantom")
    s.add_argument("--phantom", required=True, type=Path)
    s.add_argument("--geometry", required=True, choices=["ring", "sphere", "linedet", "square"])
    s.add_argument("--detectors", required=True, type=int,
                   help="ring: detectors; sphere: polar nodes (azimuths = 2x); linedet: detectors per angle; "
                        "square: grid nodes per side")
    s.add_argument("--radius", required=True, type=float, help="detection radius (half side for square)")
    s.add_argument("--nt", required=True, type=int)
    s.add_argument("--dt", required=True, type=float)
    s.add_argument("--alphas", type=int, help="rotation angles (linedet)")
    s.add_argument("--noise", type=float, default=0.0, help="relative L2 noise level")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, type=Path)

    for name, src in (("recon2d", "ring series"), ("recon3d", "sphere series"),
                      ("recon-linedet", "line-detector manifest"), ("timereverse", "square series")):
        r = sub.add_parser(name, help=f"reconstruct from a {src}")
        r.add_argument("--in", dest="inp", required=True, type=Path)
        r.add_argument("--n", type=int, required=name != "timereverse", help="grid nodes per axis")
        if name != "timereverse":
            r.add_argument("--extent", type=float, help="half width of the image (default: detection radius)")
        r.add_argument("--out", required=True, type=Path)
        r.add_argument("--pgm", action="store_true", help="also write PGM preview(s) and a scaling sidecar")

    c = sub.add_parser("compare", help="relative L2 error of image a against reference b")
    c.add_argument("--a", required=True, type=Path)
    c.add_argument("--b", required=True, type=Path)
    c.add_argument("--mask", type=float, help="radius of the comparison disk/ball")

    b = sub.add_parser("bench", help="wall-time scaling table as CSV")
    b.add_argument("--pipeline", required=True, choices=sorted(PIPELINES))
    b.add_argument("--sizes", required=True, type=_sizes)
    b.add_argument("--repeats", type=int, default=3)
    return p


def _simulate(a) -> None:
    ph = load_phantom(a.phantom)
    time = TimeGrid(a.dt, a.nt)
    noise = NoiseSpec(a.noise, a.seed)
    if a.geometry == "linedet":
        if a.alphas is None:
            raise UsageError("simulate: --alphas is required for linedet")
        geom = LineDetectorGeometry.uniform(a.radius, a.alphas, a.detectors)
        scan = forward_linedet(ph, geom, time)
        scan = [add_noise(d, noise, stream=i) for i, d in enumerate(scan)]
        write_scan(a.out, scan, geom)
        return
    if a.alphas is not None:
        raise UsageError("simulate: --alphas applies to linedet only")
    if a.geometry == "ring":
        data = forward_2d(ph, DetectorRing(a.radius, a.detectors), time)
    elif a.geometry == "sphere":
        data = forward_3d(ph, DetectorSphere(a.radius, a.detectors, 2 * a.detectors), time)
    else:
        data = forward_square_boundary(ph, SquareBoundary(a.radius, a.detectors), time)
    write_series(a.out, add_noise(data, noise))


def _expect(data, kind: str, path) -> None:
    if data.kind != kind:
        raise UsageError(f"{path}: expected {kind} data, found {data.kind}")


def _reconstruct(a):
    if a.command == "recon-linedet":
        scan, geom = read_scan(a.inp)
        return reconstruct_linedet(scan, geom, a.n, extent=a.extent)
    data = read_series(a.inp)
    if a.command == "recon2d":
        _expect(data, "ring", a.inp)
        return reconstruct_2d(data, a.n, extent=a.extent)
    if a.command == "recon3d":
        _expect(data, "sphere", a.inp)
        return reconstruct_3d(data, a.n, extent=a.extent)
    _expect(data, "square", a.inp)
    if a.n is not None and a.n != data.geometry.n:
        raise UsageError(f"timereverse: --n {a.n} differs from the boundary grid ({data.geometry.n} nodes)")
    return time_reverse_2d(data)


def _run(a) -> None:
    if a.command == "simulate":
        _simulate(a)
    elif a.command == "compare":
        print(f"{rel_l2_error(read_image(a.a), read_image(a.b), a.mask):.10g}")
    elif a.command == "bench":
        sys.stdout.write(scaling_probe(a.pipeline, a.sizes, a.repeats).to_csv())
    else:
        img = _reconstruct(a)
        write_image(a.out, img)
        if a.pgm:
            write_pgm(a.out.with_suffix(".pgm"), img)


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        _run(args)
    except (UsageError, FormatError, ValueError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
