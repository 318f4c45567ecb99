"""Voxel volume types, adjacency, topological numbers and labeling.

Coordinates are (x, y, z) integer tuples.  Arrays are indexed [z, y, x]
(numpy C order, x fastest), so flat scan order is lexicographic in
(z, y, x); every deterministic ordering in the toolkit is defined against
that scan.  Operations never mutate their input volumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import ValidationError

Coord = tuple[int, int, int]

VALID_CONNECTIVITY = (6, 18, 26)

# scipy structuring elements for the three adjacencies
_STRUCTURE = {
    6: ndimage.generate_binary_structure(3, 1),
    18: ndimage.generate_binary_structure(3, 2),
    26: ndimage.generate_binary_structure(3, 3),
}


def check_connectivity(n: int, allowed=VALID_CONNECTIVITY) -> int:
    if n not in allowed:
        raise ValidationError(f"connectivity must be one of {allowed}, got {n}")
    return n


@dataclass(frozen=True)
class Dims:
    """Voxel counts per axis."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        if self.nx <= 0 or self.ny <= 0 or self.nz <= 0:
            raise ValidationError(f"dims must be positive, got {self}")

    @property
    def shape(self) -> tuple[int, int, int]:
        """numpy shape, (nz, ny, nx)."""
        return (self.nz, self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    def contains(self, p: Coord) -> bool:
        x, y, z = p
        return 0 <= x < self.nx and 0 <= y < self.ny and 0 <= z < self.nz

    def require(self, p: Coord) -> Coord:
        if not self.contains(p):
            raise ValidationError(f"voxel {tuple(p)} outside dims {self}")
        return p


def dims_of(array: np.ndarray) -> Dims:
    nz, ny, nx = array.shape
    return Dims(nx, ny, nz)


def _check_shape(dims: Dims, data: np.ndarray):
    if data.shape != dims.shape:
        raise ValidationError(
            f"array shape {data.shape} does not match dims {dims} "
            f"(expected {dims.shape})")


@dataclass
class BinaryVolume:
    """Dense voxel set; data is bool, shape (nz, ny, nx)."""

    dims: Dims
    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=bool)
        _check_shape(self.dims, self.data)

    @classmethod
    def empty(cls, dims: Dims) -> "BinaryVolume":
        return cls(dims, np.zeros(dims.shape, dtype=bool))

    @classmethod
    def from_array(cls, data, spacing=(1.0, 1.0, 1.0)) -> "BinaryVolume":
        data = np.asarray(data, dtype=bool)
        return cls(dims_of(data), data, spacing)

    def get(self, p: Coord) -> bool:
        x, y, z = self.dims.require(p)
        return bool(self.data[z, y, x])

    def count(self) -> int:
        return int(self.data.sum())

    def is_empty(self) -> bool:
        return not self.data.any()

    def coords(self) -> list[Coord]:
        """Member voxels in lexicographic (z, y, x) scan order."""
        zs, ys, xs = np.nonzero(self.data)
        return [(int(x), int(y), int(z)) for x, y, z in zip(xs, ys, zs)]


@dataclass
class GrayVolume:
    """Dense scalar intensity field, int16, shape (nz, ny, nx)."""

    dims: Dims
    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.int16)
        _check_shape(self.dims, self.data)

    @classmethod
    def from_array(cls, data, spacing=(1.0, 1.0, 1.0)) -> "GrayVolume":
        data = np.asarray(data, dtype=np.int16)
        return cls(dims_of(data), data, spacing)

    def get(self, p: Coord) -> int:
        x, y, z = self.dims.require(p)
        return int(self.data[z, y, x])


@dataclass
class LabelVolume:
    """Dense non-negative integer field, uint32; 0 is background."""

    dims: Dims
    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint32)
        _check_shape(self.dims, self.data)

    @classmethod
    def from_array(cls, data, spacing=(1.0, 1.0, 1.0)) -> "LabelVolume":
        data = np.asarray(data, dtype=np.uint32)
        return cls(dims_of(data), data, spacing)

    def get(self, p: Coord) -> int:
        x, y, z = self.dims.require(p)
        return int(self.data[z, y, x])

    def mask(self, label: int) -> BinaryVolume:
        return BinaryVolume(self.dims, self.data == label, self.spacing)


@dataclass(frozen=True)
class ConnectivityPair:
    """Dual adjacencies for object and complement; only the two Jordan
    pairs (6, 26) and (26, 6) are meaningful."""

    object: int = 6
    complement: int = 26

    def __post_init__(self):
        if (self.object, self.complement) not in ((6, 26), (26, 6)):
            raise ValidationError(
                f"connectivity pair must be (6, 26) or (26, 6), "
                f"got ({self.object}, {self.complement})")


def neighbors(p: Coord, connectivity: int, dims: Dims) -> list[Coord]:
    """In-bounds neighbors of p, ordered lexicographically by (dz, dy, dx)."""
    check_connectivity(connectivity)
    x, y, z = dims.require(p)
    out = []
    for dx, dy, dz in _kernels.OFFSETS[connectivity]:
        q = (x + int(dx), y + int(dy), z + int(dz))
        if dims.contains(q):
            out.append(q)
    return out


def neighborhood_mask(volume: BinaryVolume, p: Coord) -> int:
    """27-bit membership mask of the 3x3x3 block around p (center included).

    Out-of-bounds block positions read as background.
    """
    x, y, z = volume.dims.require(p)
    mask = 0
    data = volume.data
    nx, ny, nz = volume.dims.nx, volume.dims.ny, volume.dims.nz
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                qx, qy, qz = x + dx, y + dy, z + dz
                if 0 <= qx < nx and 0 <= qy < ny and 0 <= qz < nz \
                        and data[qz, qy, qx]:
                    mask |= 1 << _kernels._block_index(dx, dy, dz)
    return mask


def topological_number(p: Coord, volume: BinaryVolume, connectivity: int) -> int:
    """Local component count that decides whether p separates the set.

    For connectivity 26: the number of 26-components of the punctured
    26-neighborhood of p intersected with the set.  For connectivity 6:
    the number of 6-components of the punctured 18-neighborhood that
    contain a face neighbor of p.  Membership of p itself is ignored.
    """
    if connectivity not in (6, 26):
        raise ValidationError(
            f"topological numbers support connectivity 6 or 26, got {connectivity}")
    mask = neighborhood_mask(volume, p)
    if connectivity == 26:
        return int(_kernels.topo_count_26(np.int64(mask)))
    return int(_kernels.topo_count_6(np.int64(mask)))


def _relabel_first_encounter(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Remap labels so 1..count follow first encounter in flat scan order."""
    flat = labels.ravel()
    values, first = np.unique(flat, return_index=True)
    nonzero = values != 0
    values, first = values[nonzero], first[nonzero]
    order = np.argsort(first, kind="stable")
    mapping = np.zeros(int(values.max()) + 1 if values.size else 1,
                       dtype=np.uint32)
    mapping[values[order]] = np.arange(1, order.size + 1, dtype=np.uint32)
    return mapping[flat].reshape(labels.shape), int(order.size)


def label_components(volume: BinaryVolume, connectivity: int) -> tuple[LabelVolume, int]:
    """Connected-component labeling; labels 1..count are assigned in order
    of first encounter under the (z, y, x) scan, background stays 0."""
    if connectivity not in (6, 26):
        raise ValidationError(
            f"component labeling supports connectivity 6 or 26, got {connectivity}")
    raw, _ = ndimage.label(volume.data, structure=_STRUCTURE[connectivity])
    relabeled, count = _relabel_first_encounter(raw)
    return LabelVolume(volume.dims, relabeled, volume.spacing), count


def _require_same_dims(a, b):
    if a.dims != b.dims:
        raise ValidationError(f"dims mismatch: {a.dims} vs {b.dims}")


def set_difference(a: BinaryVolume, b: BinaryVolume) -> BinaryVolume:
    _require_same_dims(a, b)
    return BinaryVolume(a.dims, a.data & ~b.data, a.spacing)


def set_union(a: BinaryVolume, b: BinaryVolume) -> BinaryVolume:
    _require_same_dims(a, b)
    return BinaryVolume(a.dims, a.data | b.data, a.spacing)


def set_intersection(a: BinaryVolume, b: BinaryVolume) -> BinaryVolume:
    _require_same_dims(a, b)
    return BinaryVolume(a.dims, a.data & b.data, a.spacing)


def complement(a: BinaryVolume) -> BinaryVolume:
    """Complement within dims."""
    return BinaryVolume(a.dims, ~a.data, a.spacing)


def pad(volume: BinaryVolume, width: int) -> BinaryVolume:
    """Surround with a background border of the given width."""
    if width < 0:
        raise ValidationError("pad width must be >= 0")
    data = np.pad(volume.data, width, mode="constant", constant_values=False)
    return BinaryVolume(dims_of(data), data, volume.spacing)


def crop_center(volume: BinaryVolume, width: int) -> BinaryVolume:
    """Inverse of pad: strip a border of the given width."""
    d = volume.dims
    data = volume.data[width:d.nz - width, width:d.ny - width,
                       width:d.nx - width]
    return BinaryVolume(dims_of(data), data.copy(), volume.spacing)
