"""Binary morphology with unit-ball structuring elements, and seeded
region growing over gray volumes.

Structuring elements are the unit balls of the 6/18/26 adjacencies,
applied iteratively; out-of-volume positions count as background, so an
object touching the border erodes there.  Callers that need border-free
closings pad by the iteration count first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .core import (BinaryVolume, Coord, GrayVolume, check_connectivity,
                   _STRUCTURE)
from .errors import ValidationError


@dataclass(frozen=True)
class StructuringElement:
    """Unit ball of an adjacency: 7, 19 or 27 voxels including the center."""

    connectivity: int = 6

    def __post_init__(self):
        check_connectivity(self.connectivity)

    @property
    def footprint(self) -> np.ndarray:
        return _STRUCTURE[self.connectivity]


@dataclass(frozen=True)
class IntensityInterval:
    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValidationError(
                f"interval low {self.low} exceeds high {self.high}")

    def contains(self, value: int) -> bool:
        return self.low <= value <= self.high


def _check_iterations(iterations: int):
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")


def dilate(volume: BinaryVolume, se: StructuringElement,
           iterations: int = 1) -> BinaryVolume:
    _check_iterations(iterations)
    out = ndimage.binary_dilation(volume.data, structure=se.footprint,
                                  iterations=iterations, border_value=0)
    return BinaryVolume(volume.dims, out, volume.spacing)


def erode(volume: BinaryVolume, se: StructuringElement,
          iterations: int = 1) -> BinaryVolume:
    _check_iterations(iterations)
    out = ndimage.binary_erosion(volume.data, structure=se.footprint,
                                 iterations=iterations, border_value=0)
    return BinaryVolume(volume.dims, out, volume.spacing)


def morphological_close(volume: BinaryVolume, se: StructuringElement,
                        n: int = 1) -> BinaryVolume:
    """Dilate n times then erode n times; fills gaps up to about 2n voxels."""
    return erode(dilate(volume, se, n), se, n)


def morphological_open(volume: BinaryVolume, se: StructuringElement,
                       n: int = 1) -> BinaryVolume:
    """Erode n times then dilate n times; drops features thinner than ~2n."""
    return dilate(erode(volume, se, n), se, n)


def region_grow(gray: GrayVolume, seeds: list[Coord],
                interval: IntensityInterval,
                connectivity: int = 26) -> BinaryVolume:
    """Union over seeds of the connected component, inside the thresholded
    set low <= intensity <= high, that contains the seed."""
    if connectivity not in (6, 26):
        raise ValidationError(
            f"region growing supports connectivity 6 or 26, got {connectivity}")
    if not seeds:
        raise ValidationError("region_grow requires at least one seed")
    d = gray.dims
    for s in seeds:
        if not d.contains(s):
            raise ValidationError(f"seed {tuple(s)} outside dims {d}")
        value = gray.get(s)
        if not interval.contains(value):
            raise ValidationError(
                f"seed {tuple(s)} has intensity {value} outside "
                f"[{interval.low}, {interval.high}]")
    allowed = (gray.data >= interval.low) & (gray.data <= interval.high)
    padded = np.pad(allowed, 1, mode="constant", constant_values=False)
    flat_allowed = np.ascontiguousarray(padded, dtype=np.uint8).ravel()
    pnz, pny, pnx = padded.shape
    sources = np.empty(len(seeds), dtype=np.int32)
    for i, (x, y, z) in enumerate(seeds):
        sources[i] = (x + 1) + pnx * ((y + 1) + pny * (z + 1))
    dist = np.full(flat_allowed.size, -1, dtype=np.int32)
    queue = np.empty(flat_allowed.size, dtype=np.int32)
    offs = _kernels.flat_offsets(connectivity, pnx, pny)
    _kernels.bfs_fill(dist, flat_allowed, sources, offs, queue)
    reached = (dist >= 0).reshape(padded.shape)[1:-1, 1:-1, 1:-1]
    return BinaryVolume(d, reached.copy(), gray.spacing)
