"""Binary series and image files, PGM export and line-detector manifests.

Series files (``TATS``) and image files (``TATI``) are little-endian with no
padding and carry f64 payloads.

Series header: magic, version u16, geometry tag u16, detector count u32,
nt u32, dt f64, R f64, then a tag-specific tail:

=====  ============  ===========================================
tag    geometry      tail
=====  ============  ===========================================
1      ring          none
2      sphere        n_theta u32 (n_phi = count / n_theta)
3      line slice    alpha f64
4      square        nodes per side u32 (R holds the half side)
=====  ============  ===========================================

Image header: magic, version u16, dims u16, dims x size u32, dims x extent f64.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .model import (
    DetectorRing,
    DetectorSphere,
    Image,
    LineDetectorGeometry,
    LineSlice,
    SeriesData,
    SquareBoundary,
    TimeGrid,
)

__all__ = [
    "FormatError",
    "write_series",
    "read_series",
    "write_image",
    "read_image",
    "write_pgm",
    "write_scan",
    "read_scan",
]

VERSION = 1
_SERIES_HEAD = struct.Struct("<4sHHIIdd")
_TAGS = {DetectorRing: 1, DetectorSphere: 2, LineSlice: 3, SquareBoundary: 4}


class FormatError(ValueError):
    """Malformed or inconsistent file."""


def _payload(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def _write_atomic(path, blob: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def series_bytes(data: SeriesData) -> bytes:
    g = data.geometry
    tag = _TAGS[type(g)]
    R = g.L if tag == 4 else g.R
    head = _SERIES_HEAD.pack(b"TATS", VERSION, tag, g.count, data.time.nt, data.time.dt, R)
    if tag == 2:
        head += struct.pack("<I", g.n_theta)
    elif tag == 3:
        head += struct.pack("<d", g.alpha)
    elif tag == 4:
        head += struct.pack("<I", g.n)
    return head + _payload(data.values)


def write_series(path, data: SeriesData) -> None:
    _write_atomic(path, series_bytes(data))


def read_series(path) -> SeriesData:
    blob = Path(path).read_bytes()
    if len(blob) < _SERIES_HEAD.size:
        raise FormatError(f"{path}: truncated series header")
    magic, version, tag, count, nt, dt, R = _SERIES_HEAD.unpack_from(blob)
    if magic != b"TATS":
        raise FormatError(f"{path}: not a series file (bad magic {magic!r})")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported series version {version}")
    off = _SERIES_HEAD.size
    try:
        if tag == 1:
            geom = DetectorRing(R, count)
        elif tag == 2:
            (n_theta,) = struct.unpack_from("<I", blob, off)
            off += 4
            if n_theta == 0 or count % n_theta:
                raise FormatError(f"{path}: sphere detector count {count} not divisible by n_theta {n_theta}")
            geom = DetectorSphere(R, n_theta, count // n_theta)
        elif tag == 3:
            (alpha,) = struct.unpack_from("<d", blob, off)
            off += 8
            geom = LineSlice(R, count, alpha)
        elif tag == 4:
            (n,) = struct.unpack_from("<I", blob, off)
            off += 4
            geom = SquareBoundary(R, n)
            if geom.count != count:
                raise FormatError(f"{path}: square of {n} nodes has {geom.count} boundary nodes, header says {count}")
        else:
            raise FormatError(f"{path}: unknown geometry tag {tag}")
        time = TimeGrid(dt, nt)
    except struct.error as exc:
        raise FormatError(f"{path}: truncated series header") from exc
    need = count * nt * 8
    if len(blob) - off != need:
        raise FormatError(f"{path}: payload is {len(blob) - off} bytes, expected {need}")
    values = np.frombuffer(blob, dtype="<f8", offset=off).reshape(count, nt).astype(float)
    return SeriesData(geom, values, time)


def image_bytes(img: Image) -> bytes:
    d = img.ndim
    head = b"TATI" + struct.pack("<HH", VERSION, d)
    head += struct.pack(f"<{d}I", *img.values.shape)
    head += struct.pack(f"<{d}d", *([img.extent] * d))
    return head + _payload(img.values)


def write_image(path, img: Image) -> None:
    _write_atomic(path, image_bytes(img))


def read_image(path) -> Image:
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != b"TATI":
        raise FormatError(f"{path}: not an image file")
    version, d = struct.unpack_from("<HH", blob, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported image version {version}")
    if d not in (2, 3):
        raise FormatError(f"{path}: image dimension must be 2 or 3, got {d}")
    off = 8
    try:
        shape = struct.unpack_from(f"<{d}I", blob, off)
        off += 4 * d
        extents = struct.unpack_from(f"<{d}d", blob, off)
        off += 8 * d
    except struct.error as exc:
        raise FormatError(f"{path}: truncated image header") from exc
    if len(set(shape)) != 1 or len(set(extents)) != 1:
        raise FormatError(f"{path}: only cubic grids are supported")
    need = int(np.prod(shape)) * 8
    if len(blob) - off != need:
        raise FormatError(f"{path}: payload is {len(blob) - off} bytes, expected {need}")
    values = np.frombuffer(blob, dtype="<f8", offset=off).reshape(shape).astype(float)
    return Image(values, extents[0])


def _pgm(plane: np.ndarray, lo: float, hi: float) -> bytes:
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    # rows run from +y down to -y, columns along +x
    pix = np.clip(np.rint((plane.T[::-1] - lo) * scale), 0, 255).astype(np.uint8)
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode() + pix.tobytes()


def write_pgm(path, img: Image) -> list:
    """Write an 8-bit PGM (2-D) or one PGM per slice along the last axis (3-D),
    plus a JSON sidecar with the linear scaling.  Returns the written paths."""
    path = Path(path)
    lo, hi = float(img.values.min()), float(img.values.max())
    written = []
    if img.ndim == 2:
        _write_atomic(path, _pgm(img.values, lo, hi))
        written.append(path)
    else:
        for k in range(img.n):
            p = path.with_name(f"{path.stem}_{k:04d}{path.suffix or '.pgm'}")
            _write_atomic(p, _pgm(img.values[:, :, k], lo, hi))
            written.append(p)
    side = path.with_name(path.name + ".json")
    meta = {
        "min": lo,
        "max": hi,
        "mapping": "pixel = round(255 * (value - min) / (max - min))",
        "extent": img.extent,
        "files": [p.name for p in written],
    }
    _write_atomic(side, (json.dumps(meta, indent=2) + "\n").encode())
    return written + [side]


def write_scan(path, scan, geom: LineDetectorGeometry) -> list:
    """One series file per rotation angle next to a JSON manifest at ``path``."""
    path = Path(path)
    scan = list(scan)
    if len(scan) != len(geom.alphas):
        raise ValueError("scan and geometry disagree on the number of angles")
    names = []
    for a, data in enumerate(scan):
        name = f"{path.stem}_{a:04d}.tats"
        write_series(path.with_name(name), data)
        names.append(name)
    doc = {"format": "tats-linedet", "version": VERSION, "R": geom.R, "n_beta": geom.n_beta,
           "alphas": list(geom.alphas), "files": names}
    _write_atomic(path, (json.dumps(doc, indent=2) + "\n").encode())
    return [path.with_name(n) for n in names] + [path]


def read_scan(path):
    """Returns ``(scan, geometry)`` from a manifest written by :func:`write_scan`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: manifest is not valid JSON") from exc
    if not isinstance(doc, dict) or doc.get("format") != "tats-linedet":
        raise FormatError(f"{path}: not a line-detector manifest")
    try:
        geom = LineDetectorGeometry(float(doc["R"]), tuple(doc["alphas"]), int(doc["n_beta"]))
        files = list(doc["files"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: manifest missing field {exc}") from exc
    if len(files) != len(geom.alphas):
        raise FormatError(f"{path}: {len(files)} files for {len(geom.alphas)} angles")
    scan = []
    for alpha, name in zip(geom.alphas, files):
        data = read_series(path.with_name(name))
        g = data.geometry
        if data.kind != "line" or g.count != geom.n_beta or g.alpha != alpha or g.R != geom.R:
            raise FormatError(f"{name}: slice geometry does not match the manifest")
        scan.append(data)
    return scan, geom
