"""Tunnel closing by farthest-first carving.

The object is embedded in a filled, margin-padded box.  Voxels are examined
from the farthest (by the object distance map) inward, driven by an array
of FIFO buckets indexed by distance.  A popped background voxel is removed
from the output unless it locally separates the already-removed region into
two parts, judged by the topological number in the complement adjacency of
the connectivity pair; space outside the box counts as already removed.
What survives is the object plus one thin surface spanning each tunnel.

A positive max_hole_size keeps a separating voxel only while the hole
diameter it spans, estimated as twice its distance to the object, stays
within the threshold; zero means close tunnels of any size.

Two engines produce bit-identical results: a compiled kernel (default) and
a plain-Python reference built directly on HierarchicalList.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import (BinaryVolume, ConnectivityPair, crop_center, pad,
                   set_difference)
from .distance import METRIC_CONNECTIVITY, check_metric, distance_map
from .errors import ValidationError

_METRIC_FOR_OBJECT = {6: "d6", 26: "d26"}


@dataclass(frozen=True)
class ClosingParams:
    """Connectivity pair, matching metric, hole-size threshold (0 means
    unlimited) and bounding-box padding."""

    pair: ConnectivityPair = ConnectivityPair(6, 26)
    metric: str = "d6"
    max_hole_size: int = 0
    margin: int = 2

    def __post_init__(self):
        check_metric(self.metric)
        expected = _METRIC_FOR_OBJECT[self.pair.object]
        if self.metric != expected:
            raise ValidationError(
                f"metric {self.metric!r} does not match object connectivity "
                f"{self.pair.object} (expected {expected!r})")
        if self.max_hole_size < 0:
            raise ValidationError("max_hole_size must be >= 0")
        if self.margin < 1:
            raise ValidationError("margin must be >= 1")


@dataclass
class ClosingResult:
    """filled = object plus filling surfaces; surfaces = filled minus object."""

    filled: BinaryVolume
    surfaces: BinaryVolume
    pushed: int = 0
    popped: int = 0


class HierarchicalList:
    """Array of FIFO buckets indexed by distance; pops are farthest-first,
    first-in-first-out within one distance.

    Each item may enter at most once: pushing an item that is queued or was
    already popped is a no-op.
    """

    def __init__(self, max_value: int):
        if max_value < 0:
            raise ValidationError("max_value must be >= 0")
        self.buckets = [deque() for _ in range(max_value + 1)]
        self.current = -1
        self._seen = set()
        self._live = 0

    def __len__(self):
        return self._live

    def push(self, item, value: int) -> bool:
        """Queue item at the given distance; returns False on duplicates."""
        if item in self._seen:
            return False
        if not 0 <= value < len(self.buckets):
            raise ValidationError(
                f"distance {value} outside 0..{len(self.buckets) - 1}")
        self._seen.add(item)
        self.buckets[value].append(item)
        self._live += 1
        if value > self.current:
            self.current = value
        return True

    def pop(self):
        """Remove and return the front of the highest non-empty bucket,
        or None when exhausted."""
        while self.current >= 0 and not self.buckets[self.current]:
            self.current -= 1
        if self.current < 0:
            return None
        self._live -= 1
        return self.buckets[self.current].popleft()


def _shell_mask(shape) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    if all(s > 2 for s in shape):
        mask[1:-1, 1:-1, 1:-1] = False
    return mask


def _carve_compiled(embedded: BinaryVolume, dist: np.ndarray,
                    params: ClosingParams):
    shape = embedded.dims.shape
    obj = np.pad(embedded.data, 1, constant_values=False)
    obj_flat = np.ascontiguousarray(obj, dtype=np.uint8).ravel()
    carved = np.ones(obj.shape, dtype=np.uint8)
    carved[1:-1, 1:-1, 1:-1] = 0
    carved_flat = carved.ravel()
    seen_flat = carved_flat.copy()
    dist_flat = np.pad(dist, 1, constant_values=-1).astype(np.int32).ravel()
    counts = np.bincount(dist.ravel())
    starts = np.zeros(counts.size, dtype=np.int64)
    starts[1:] = np.cumsum(counts)[:-1]
    queue = np.empty(int(counts.sum()), dtype=np.int32)
    shell = np.flatnonzero(np.pad(_shell_mask(shape), 1,
                                  constant_values=False).ravel())
    shell = shell.astype(np.int32)
    pnz, pny, pnx = obj.shape
    pushed, popped = _kernels.carve_holes(
        obj_flat, carved_flat, seen_flat, dist_flat,
        starts.copy(), starts.copy(), queue, shell,
        _kernels.flat_offsets(params.pair.object, pnx, pny),
        _kernels.flat_block_offsets(pnx, pny),
        params.pair.complement, params.max_hole_size)
    kept = ~carved_flat.reshape(obj.shape).astype(bool)
    return kept[1:-1, 1:-1, 1:-1], pushed, popped


def _carved_neighborhood(carved: np.ndarray, x: int, y: int, z: int,
                         shape) -> int:
    """27-bit mask of removed positions around (x, y, z); out-of-box
    positions count as removed."""
    nz, ny, nx = shape
    mask = 0
    bit = 0
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                qx, qy, qz = x + dx, y + dy, z + dz
                if not (0 <= qx < nx and 0 <= qy < ny and 0 <= qz < nz):
                    mask |= 1 << bit
                elif carved[qz, qy, qx]:
                    mask |= 1 << bit
                bit += 1
    return mask


def _carve_python(embedded: BinaryVolume, dist: np.ndarray,
                  params: ClosingParams):
    dims = embedded.dims
    shape = dims.shape
    obj = embedded.data
    carved = np.zeros(shape, dtype=bool)
    hl = HierarchicalList(int(dist.max()))
    shell_zyx = np.argwhere(_shell_mask(shape))
    for z, y, x in shell_zyx:
        hl.push((int(x), int(y), int(z)), int(dist[z, y, x]))
    pushed = len(shell_zyx)
    popped = 0
    offsets = _kernels.OFFSETS[params.pair.object]
    count = (_kernels.topo_count_26 if params.pair.complement == 26
             else _kernels.topo_count_6)
    threshold = params.max_hole_size
    while (p := hl.pop()) is not None:
        popped += 1
        x, y, z = p
        if not obj[z, y, x]:
            mask = _carved_neighborhood(carved, x, y, z, shape)
            keep = count(np.int64(mask)) >= 2 and (
                threshold == 0 or 2 * int(dist[z, y, x]) <= threshold)
            if not keep:
                carved[z, y, x] = True
        for dx, dy, dz in offsets:
            q = (x + int(dx), y + int(dy), z + int(dz))
            if dims.contains(q) and hl.push(q, int(dist[q[2], q[1], q[0]])):
                pushed += 1
    return ~carved, pushed, popped


def _stabilize(kept: np.ndarray, obj: np.ndarray, complement_conn: int):
    """Drop retained voxels that no longer separate the final complement.

    The carve's keep decision is made mid-carve; once the whole box has
    been processed, a voxel kept next to a hole that stayed open (its core
    exceeded the size threshold) may not separate anything anymore.  This
    re-applies the separation test against the final state, in scan order,
    until stable, which also enforces that every surviving surface voxel
    still locally separates the complement of the output.
    """
    count = (_kernels.topo_count_26 if complement_conn == 26
             else _kernels.topo_count_6)
    carved = ~kept
    shape = carved.shape
    while True:
        changed = False
        for z, y, x in np.argwhere(kept & ~obj):
            mask = _carved_neighborhood(carved, int(x), int(y), int(z), shape)
            if count(np.int64(mask)) < 2:
                carved[z, y, x] = True
                kept[z, y, x] = False
                changed = True
        if not changed:
            return


def close_holes(volume: BinaryVolume, params: ClosingParams,
                engine: str = "compiled") -> ClosingResult:
    """Close the tunnels of the object; see the module docstring for the
    procedure.  Returns the filled object and the filling surfaces, both in
    the input frame."""
    if volume.is_empty():
        raise ValidationError("close_holes requires a nonempty object")
    if engine not in ("compiled", "python"):
        raise ValidationError(f"unknown engine {engine!r}")
    embedded = pad(volume, params.margin)
    dmap = distance_map(embedded.dims, embedded, params.metric)
    carve = _carve_compiled if engine == "compiled" else _carve_python
    kept, pushed, popped = carve(embedded, dmap.dist, params)
    _stabilize(kept, embedded.data, params.pair.complement)
    filled = crop_center(BinaryVolume(embedded.dims, kept), params.margin)
    surfaces = set_difference(filled, volume)
    return ClosingResult(filled=filled, surfaces=surfaces,
                         pushed=pushed, popped=popped)


def surfaces_only(volume: BinaryVolume, params: ClosingParams,
                  engine: str = "compiled") -> BinaryVolume:
    """Just the filling surfaces of close_holes."""
    return close_holes(volume, params, engine).surfaces


def unlimited(params: ClosingParams) -> ClosingParams:
    """Same parameters with the hole-size threshold lifted."""
    return replace(params, max_hole_size=0)
