"""Binary field/projection/raster files, key = value sidecars and PGM export.

Every binary file starts with a 16-byte header: an 8-byte magic, a uint32
format version and a uint32 dimension count.  The dimensions follow as
uint64 values and then the payload as float32, all little-endian.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError

VERSION = 1
MAGIC_FIELD = b"POLCTFLD"
MAGIC_PROJ = b"POLCTPRJ"
MAGIC_IMAGE = b"POLCTIMG"
MAGICS = {MAGIC_FIELD: "field", MAGIC_PROJ: "projection", MAGIC_IMAGE: "raster"}
HEADER = struct.Struct("<8sII")
META_SUFFIX = ".meta"


def atomic_write(path, payload: bytes) -> None:
    """Write ``payload`` to a temporary file beside ``path``, then rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_array(magic: bytes, array: np.ndarray) -> bytes:
    array = np.asarray(array)
    head = HEADER.pack(magic, VERSION, array.ndim)
    dims = np.asarray(array.shape, dtype="<u8").tobytes()
    return head + dims + np.ascontiguousarray(array, dtype="<f4").tobytes()


def decode_array(blob: bytes, magic: bytes, name: str = "file") -> np.ndarray:
    """Parse a buffer produced by :func:`encode_array`; errors name the failing byte offset."""
    if len(blob) < HEADER.size:
        raise InputError(f"{name}: truncated header at byte offset {len(blob)}, "
                         f"need {HEADER.size} bytes")
    got, version, ndim = HEADER.unpack_from(blob, 0)
    if got != magic:
        want = MAGICS.get(magic, magic.decode(errors="replace"))
        raise InputError(f"{name}: bad magic {got!r} at byte offset 0, expected {want} file")
    if version != VERSION:
        raise InputError(f"{name}: unsupported version {version} at byte offset 8")
    if ndim == 0 or ndim > 8:
        raise InputError(f"{name}: implausible dimension count {ndim} at byte offset 12")
    end_dims = HEADER.size + 8 * ndim
    if len(blob) < end_dims:
        raise InputError(f"{name}: truncated dimensions at byte offset {len(blob)}, "
                         f"need {end_dims} bytes")
    dims = tuple(int(d) for d in np.frombuffer(blob, dtype="<u8", count=ndim, offset=HEADER.size))
    count = int(np.prod(dims, dtype=np.uint64))
    end = end_dims + 4 * count
    if len(blob) < end:
        raise InputError(f"{name}: truncated payload at byte offset {len(blob)}, "
                         f"expected {end} bytes")
    if len(blob) > end:
        raise InputError(f"{name}: {len(blob) - end} trailing bytes at byte offset {end}")
    return np.frombuffer(blob, dtype="<f4", count=count, offset=end_dims).reshape(dims).copy()


def _meta_path(path) -> Path:
    return Path(str(path) + META_SUFFIX)


def write_meta(path, meta: dict) -> None:
    lines = [f"{k} = {v}" for k, v in meta.items()]
    atomic_write(_meta_path(path), ("\n".join(lines) + "\n").encode())


def read_meta(path) -> dict:
    """Sidecar of ``path`` as a dict of strings; a missing sidecar gives ``{}``."""
    mp = _meta_path(path)
    if not mp.exists():
        return {}
    out = {}
    for n, line in enumerate(mp.read_text().splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if " = " not in line:
            raise InputError(f"{mp}: line {n} is not 'key = value'")
        k, v = line.split(" = ", 1)
        out[k.strip()] = v.strip()
    return out


def _write(path, magic, array, meta):
    atomic_write(path, encode_array(magic, array))
    if meta is not None:
        write_meta(path, meta)


def _read(path, magic):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return decode_array(blob, magic, str(path)), read_meta(path)


def write_field(path, field: np.ndarray, n_slices: int, meta: dict | None = None) -> None:
    """Flat polar field stored as ``(slices, cells per slice)``."""
    field = np.asarray(field).reshape(n_slices, -1)
    _write(path, MAGIC_FIELD, field, meta)


def read_field(path) -> tuple[np.ndarray, dict]:
    arr, meta = _read(path, MAGIC_FIELD)
    if arr.ndim != 2:
        raise InputError(f"{path}: field file must have 2 dimensions, found {arr.ndim}")
    return arr.reshape(-1), meta


def write_projections(path, data: np.ndarray, n_u: int, n_v: int, meta: dict | None = None) -> None:
    """Projection data with dimensions ``(views, u, v)``."""
    data = np.asarray(data).reshape(-1, n_u, n_v)
    _write(path, MAGIC_PROJ, data, meta)


def read_projections(path) -> tuple[np.ndarray, dict]:
    """Returns ``(data[view, line], meta)`` with lines in u-major order."""
    arr, meta = _read(path, MAGIC_PROJ)
    if arr.ndim != 3:
        raise InputError(f"{path}: projection file must have 3 dimensions, found {arr.ndim}")
    return arr.reshape(arr.shape[0], -1), meta


def write_raster(path, image: np.ndarray, meta: dict | None = None) -> None:
    _write(path, MAGIC_IMAGE, image, meta)


def read_raster(path) -> tuple[np.ndarray, dict]:
    return _read(path, MAGIC_IMAGE)


def window(image: np.ndarray, lo: float | None = None, hi: float | None = None):
    """Linear map of ``[lo, hi]`` onto 0..65535 with clipping; returns ``(uint16, lo, hi)``."""
    img = np.asarray(image, dtype=np.float64)
    lo = float(np.min(img)) if lo is None else float(lo)
    hi = float(np.max(img)) if hi is None else float(hi)
    if hi <= lo:
        scaled = np.zeros(img.shape)
    else:
        scaled = (img - lo) / (hi - lo) * 65535.0
    return np.clip(np.rint(scaled), 0, 65535).astype(np.uint16), lo, hi


def encode_pgm(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels, dtype=np.uint16)
    if pixels.ndim != 2:
        raise InputError("PGM export needs a 2D image")
    rows, cols = pixels.shape
    return f"P5\n{cols} {rows}\n65535\n".encode() + pixels.astype(">u2").tobytes()


def decode_pgm(blob: bytes) -> np.ndarray:
    parts = blob.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise InputError("not a binary PGM (P5) file at byte offset 0")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 65535:
        raise InputError(f"expected 16-bit PGM, found maxval {maxval}")
    start = len(blob) - 2 * rows * cols
    if start <= 0:
        raise InputError(f"truncated PGM payload at byte offset {len(blob)}")
    return np.frombuffer(blob, dtype=">u2", offset=start).reshape(rows, cols).astype(np.uint16)


def export_pgm(stem, image: np.ndarray, lo: float | None = None, hi: float | None = None,
               meta: dict | None = None) -> list[Path]:
    """One 16-bit PGM per slice (``stem_0000.pgm`` ...) sharing one window.

    The window bounds go into each file's sidecar as ``window.min`` / ``window.max``.
    """
    img = np.asarray(image, dtype=np.float64)
    stack = img[None] if img.ndim == 2 else img
    _, lo, hi = window(stack, lo, hi)
    paths = []
    for k, sl in enumerate(stack):
        pix, _, _ = window(sl, lo, hi)
        p = Path(f"{stem}_{k:04d}.pgm")
        atomic_write(p, encode_pgm(pix))
        info = dict(meta or {})
        info.update({"window.min": repr(lo), "window.max": repr(hi), "slice": k,
                     "mapping": "round((value - min) / (max - min) * 65535), clipped"})
        write_meta(p, info)
        paths.append(p)
    return paths
