"""Bit-exact volume files and viewer-friendly exports.

File layout (little-endian throughout), 30-byte header then payload:

    bytes 0..4    magic "LVOL1"
    byte  5       voxel kind: 0 mask (uint8 0/1), 1 gray (int16), 2 label (uint32)
    bytes 6..17   nx, ny, nz as uint32
    bytes 18..29  spacing sx, sy, sz as float32 (mm, metadata only)
    payload       nx*ny*nz voxels, x fastest then y then z

Slice exports are 8-bit binary PGM (P5): masks render 0/255, labels use the
fixed palette 0,60,120,180,255 for values 0..4 (anything higher clips to
255), gray is windowed linearly.  Point exports are one "x y z label" line
per voxel in (z, y, x) scan order.
"""

from __future__ import annotations

import struct

import numpy as np

from .core import BinaryVolume, Dims, GrayVolume, LabelVolume
from .errors import ValidationError, VolumeIOError

MAGIC = b"LVOL1"
HEADER = struct.Struct("<5sBIIIfff")

KIND_MASK = 0
KIND_GRAY = 1
KIND_LABEL = 2

_KIND_DTYPE = {
    KIND_MASK: np.dtype("<u1"),
    KIND_GRAY: np.dtype("<i2"),
    KIND_LABEL: np.dtype("<u4"),
}

LABEL_PALETTE = np.array([0, 60, 120, 180, 255], dtype=np.uint8)


def _kind_of(volume) -> int:
    if isinstance(volume, BinaryVolume):
        return KIND_MASK
    if isinstance(volume, GrayVolume):
        return KIND_GRAY
    if isinstance(volume, LabelVolume):
        return KIND_LABEL
    raise ValidationError(f"not a volume: {type(volume).__name__}")


def write_volume(path, volume) -> None:
    """Serialize a volume; read_volume restores it bit-exactly."""
    kind = _kind_of(volume)
    d = volume.dims
    header = HEADER.pack(MAGIC, kind, d.nx, d.ny, d.nz, *volume.spacing)
    payload = np.ascontiguousarray(volume.data,
                                   dtype=_KIND_DTYPE[kind]).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise VolumeIOError(f"cannot write {path}: {exc}") from exc


def read_volume(path):
    """Load a volume file; the returned type follows the voxel kind."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise VolumeIOError(f"cannot read {path}: {exc}") from exc
    if len(raw) < HEADER.size:
        raise VolumeIOError(
            f"truncated header in {path}: expected {HEADER.size} bytes, "
            f"got {len(raw)}")
    magic, kind, nx, ny, nz, sx, sy, sz = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise VolumeIOError(f"bad magic in {path}: {magic!r}")
    if kind not in _KIND_DTYPE:
        raise VolumeIOError(f"unknown voxel kind {kind} in {path}")
    dtype = _KIND_DTYPE[kind]
    expected = HEADER.size + nx * ny * nz * dtype.itemsize
    if len(raw) != expected:
        raise VolumeIOError(
            f"truncated payload in {path}: expected {expected} bytes, "
            f"got {len(raw)}")
    dims = Dims(int(nx), int(ny), int(nz))
    data = np.frombuffer(raw, dtype=dtype, offset=HEADER.size).reshape(dims.shape)
    spacing = (float(sx), float(sy), float(sz))
    if kind == KIND_MASK:
        return BinaryVolume(dims, data != 0, spacing)
    if kind == KIND_GRAY:
        return GrayVolume(dims, data.copy(), spacing)
    return LabelVolume(dims, data.copy(), spacing)


def import_raw(path, dims: Dims, kind: int, spacing=(1.0, 1.0, 1.0)):
    """Ingest a headerless dump (x fastest, little-endian) of the given
    dims and voxel kind."""
    if kind not in _KIND_DTYPE:
        raise VolumeIOError(f"unknown voxel kind {kind}")
    dtype = _KIND_DTYPE[kind]
    try:
        raw = np.fromfile(path, dtype=dtype)
    except OSError as exc:
        raise VolumeIOError(f"cannot read {path}: {exc}") from exc
    if raw.size != dims.size:
        raise VolumeIOError(
            f"raw payload of {path} has {raw.size} voxels, dims {dims} "
            f"need {dims.size}")
    data = raw.reshape(dims.shape)
    if kind == KIND_MASK:
        return BinaryVolume(dims, data != 0, spacing)
    if kind == KIND_GRAY:
        return GrayVolume(dims, data.copy(), spacing)
    return LabelVolume(dims, data.copy(), spacing)


def _slice_plane(data: np.ndarray, axis: str, index: int, dims: Dims) -> np.ndarray:
    if axis == "z":
        limit = dims.nz
        plane = data[index] if index < limit else None
    elif axis == "y":
        limit = dims.ny
        plane = data[:, index, :] if index < limit else None
    elif axis == "x":
        limit = dims.nx
        plane = data[:, :, index] if index < limit else None
    else:
        raise ValidationError(f"axis must be x, y or z, got {axis!r}")
    if index < 0 or plane is None:
        raise ValidationError(f"slice index {index} out of range 0..{limit - 1}")
    return plane


def slice_pixels(volume, axis: str, index: int, window=None) -> np.ndarray:
    """8-bit raster of an orthogonal cross-section (rows follow the slower
    remaining axis: z slices are y-by-x, y slices z-by-x, x slices z-by-y)."""
    plane = _slice_plane(volume.data, axis, index, volume.dims)
    if isinstance(volume, BinaryVolume):
        return plane.astype(np.uint8) * 255
    if isinstance(volume, LabelVolume):
        return LABEL_PALETTE[np.minimum(plane, 4)]
    lo, hi = window if window is not None else (int(volume.data.min()),
                                                int(volume.data.max()))
    if lo > hi:
        raise ValidationError(f"window low {lo} exceeds high {hi}")
    span = max(hi - lo, 1)
    scaled = (np.clip(plane, lo, hi).astype(np.float64) - lo) * 255.0 / span
    return np.floor(scaled).astype(np.uint8)


def write_pgm(path, pixels: np.ndarray) -> None:
    """Binary PGM (P5), maxval 255."""
    h, w = pixels.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
    except OSError as exc:
        raise VolumeIOError(f"cannot write {path}: {exc}") from exc


def export_slice(volume, axis: str, index: int, path, window=None) -> None:
    write_pgm(path, slice_pixels(volume, axis, index, window))


def points_lines(volume, label: int | None = None) -> list[str]:
    """"x y z label" rows in (z, y, x) scan order; masks report label 1."""
    if isinstance(volume, BinaryVolume):
        values = volume.data.astype(np.uint32)
    elif isinstance(volume, LabelVolume):
        values = volume.data
    else:
        raise ValidationError("point export expects a mask or label volume")
    if label is None:
        coords = np.argwhere(values != 0)
    else:
        coords = np.argwhere(values == label)
    return [f"{x} {y} {z} {values[z, y, x]}" for z, y, x in coords]


def export_points(volume, path, label: int | None = None) -> None:
    lines = points_lines(volume, label)
    try:
        with open(path, "w", encoding="ascii") as fh:
            for line in lines:
                fh.write(line + "\n")
    except OSError as exc:
        raise VolumeIOError(f"cannot write {path}: {exc}") from exc
