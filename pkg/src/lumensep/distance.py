"""Grid distance transforms and mask-constrained shortest paths.

Distances are integer step counts under the chosen adjacency, computed by
multi-source breadth-first propagation: d6 is city-block, d26 chessboard,
d18 the face-or-edge step metric.  Voxels unreachable from the source set
carry the UNREACHED sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import BinaryVolume, Coord, Dims
from .errors import DisconnectedError, ValidationError

UNREACHED = -1

METRIC_CONNECTIVITY = {"d6": 6, "d18": 18, "d26": 26}


def check_metric(metric: str) -> str:
    if metric not in METRIC_CONNECTIVITY:
        raise ValidationError(
            f"metric must be one of {sorted(METRIC_CONNECTIVITY)}, got {metric!r}")
    return metric


@dataclass
class DistanceMap:
    """Per-voxel step distance to the source set; UNREACHED where no path."""

    dims: Dims
    dist: np.ndarray
    metric: str = "d6"

    def __post_init__(self):
        self.dist = np.ascontiguousarray(self.dist, dtype=np.int32)
        if self.dist.shape != self.dims.shape:
            raise ValidationError(
                f"distance array shape {self.dist.shape} does not match {self.dims}")

    def get(self, p: Coord) -> int:
        x, y, z = self.dims.require(p)
        return int(self.dist[z, y, x])

    def max_finite(self) -> int:
        finite = self.dist[self.dist != UNREACHED]
        return int(finite.max()) if finite.size else 0


def _flatten_coords(coords, dims: Dims, pad_nx: int, pad_ny: int) -> np.ndarray:
    """Flat indices in the ghost-padded frame, validated against dims."""
    out = np.empty(len(coords), dtype=np.int32)
    for i, p in enumerate(coords):
        x, y, z = dims.require(p)
        out[i] = (x + 1) + pad_nx * ((y + 1) + pad_ny * (z + 1))
    return out


def _bfs_padded(dims: Dims, allowed_core: np.ndarray, sources_flat: np.ndarray,
                metric: str) -> np.ndarray:
    """Run the BFS kernel with a one-voxel ghost border; returns the padded
    int32 distance array (ghost kept, callers crop)."""
    padded = np.pad(allowed_core, 1, mode="constant", constant_values=False)
    allowed = np.ascontiguousarray(padded, dtype=np.uint8).ravel()
    dist = np.full(allowed.size, UNREACHED, dtype=np.int32)
    queue = np.empty(allowed.size, dtype=np.int32)
    pnz, pny, pnx = padded.shape
    offs = _kernels.flat_offsets(METRIC_CONNECTIVITY[metric], pnx, pny)
    _kernels.bfs_fill(dist, allowed, sources_flat, offs, queue)
    return dist.reshape(padded.shape)


def distance_map(domain: Dims, source: BinaryVolume, metric: str) -> DistanceMap:
    """Distance of every voxel of the domain to the nearest source voxel."""
    check_metric(metric)
    if source.dims != domain:
        raise ValidationError(
            f"source dims {source.dims} do not match domain {domain}")
    if source.is_empty():
        raise ValidationError("distance_map requires a nonempty source set")
    padded_src = np.pad(source.data, 1, mode="constant", constant_values=False)
    sources = np.flatnonzero(padded_src.ravel()).astype(np.int32)
    allowed = np.ones(domain.shape, dtype=bool)
    dist = _bfs_padded(domain, allowed, sources, metric)
    core = dist[1:-1, 1:-1, 1:-1].copy()
    return DistanceMap(domain, core, metric)


def distance_from(mask: BinaryVolume, source: Coord, metric: str) -> DistanceMap:
    """Distance inside the mask from a single source voxel; voxels outside
    the mask (or cut off from the source) carry UNREACHED."""
    check_metric(metric)
    d = mask.dims
    pnx, pny = d.nx + 2, d.ny + 2
    sources = _flatten_coords([source], d, pnx, pny)
    dist = _bfs_padded(d, mask.data, sources, metric)
    return DistanceMap(d, dist[1:-1, 1:-1, 1:-1].copy(), metric)


def shortest_path(mask: BinaryVolume, a: Coord, b: Coord, metric: str) -> list[Coord]:
    """Minimal-step path from a to b staying inside the mask.

    Among equal-length paths, returns the one that greedily takes the first
    admissible neighbor in the fixed (dz, dy, dx) enumeration at every step,
    which makes the result deterministic.
    """
    check_metric(metric)
    for name, p in (("a", a), ("b", b)):
        mask.dims.require(p)
        if not mask.get(p):
            raise ValidationError(f"endpoint {name}={tuple(p)} is not in the mask")
    dmap = distance_from(mask, b, metric)
    if dmap.get(a) == UNREACHED:
        raise DisconnectedError(
            f"no {metric} path from {tuple(a)} to {tuple(b)} inside the mask")
    offsets = _kernels.OFFSETS[METRIC_CONNECTIVITY[metric]]
    dims = mask.dims
    path = [tuple(a)]
    cur = tuple(a)
    d = dmap.get(cur)
    while d > 0:
        x, y, z = cur
        for dx, dy, dz in offsets:
            q = (x + int(dx), y + int(dy), z + int(dz))
            if dims.contains(q) and mask.get(q) and dmap.get(q) == d - 1:
                cur = q
                break
        else:
            raise AssertionError("distance map inconsistent with mask")
        path.append(cur)
        d -= 1
    return path


def path_mask(dims: Dims, path: list[Coord]) -> BinaryVolume:
    """Binary volume containing exactly the path voxels."""
    vol = BinaryVolume.empty(dims)
    for x, y, z in path:
        dims.require((x, y, z))
        vol.data[z, y, x] = True
    return vol
