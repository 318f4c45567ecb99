"""Compiled inner loops and the shared neighborhood tables.

Volumes are stored z-major / x-fastest: a voxel (x, y, z) of a volume with
dims (nx, ny, nz) lives at flat index x + nx * (y + ny * z), i.e. numpy
shape (nz, ny, nx) in C order.  Every kernel here works on flat arrays that
the callers pad with a one-voxel ghost border, so neighbor offsets never
leave the allocation.

The 3x3x3 neighborhood of a voxel is encoded as a 27-bit mask.  Bit index
of the offset (dx, dy, dz) is (dz+1)*9 + (dy+1)*3 + (dx+1); the center is
bit 13.  Adjacency inside the block is precomputed once per connectivity.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CENTER_BIT = 13


def _block_index(dx: int, dy: int, dz: int) -> int:
    return (dz + 1) * 9 + (dy + 1) * 3 + (dx + 1)


def _make_offsets(connectivity: int) -> np.ndarray:
    """Neighbor offsets (dx, dy, dz), sorted lexicographically by (dz, dy, dx).

    6: face neighbors; 18: face or edge; 26: face, edge or corner.
    """
    offs = []
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx == 0 and dy == 0 and dz == 0:
                    continue
                order = abs(dx) + abs(dy) + abs(dz)
                if connectivity == 6 and order != 1:
                    continue
                if connectivity == 18 and order > 2:
                    continue
                offs.append((dx, dy, dz))
    return np.asarray(offs, dtype=np.int64)


OFFSETS = {6: _make_offsets(6), 18: _make_offsets(18), 26: _make_offsets(26)}


def _adjacency_table(connectivity: int) -> np.ndarray:
    """For each block position, the bitmask of block positions adjacent to it."""
    table = np.zeros(27, dtype=np.int64)
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                i = _block_index(dx, dy, dz)
                for ox, oy, oz in OFFSETS[connectivity]:
                    nx, ny, nz = dx + ox, dy + oy, dz + oz
                    if max(abs(nx), abs(ny), abs(nz)) <= 1:
                        table[i] |= 1 << _block_index(nx, ny, nz)
    return table


ADJ6 = _adjacency_table(6)
ADJ26 = _adjacency_table(26)


def _region_mask(connectivity: int) -> int:
    mask = 0
    for dx, dy, dz in OFFSETS[connectivity]:
        mask |= 1 << _block_index(dx, dy, dz)
    return mask


N6_MASK = _region_mask(6)
N18_MASK = _region_mask(18)
N26_MASK = _region_mask(26)


@njit(cache=True)
def topo_count_26(mask):
    """Number of 26-connected components of the punctured 26-neighborhood."""
    members = mask & N26_MASK
    count = 0
    remaining = members
    while remaining != 0:
        seed = remaining & (-remaining)
        comp = seed
        frontier = seed
        while frontier != 0:
            grown = np.int64(0)
            for i in range(27):
                if frontier & (np.int64(1) << i):
                    grown |= ADJ26[i]
            grown &= members & ~comp
            comp |= grown
            frontier = grown
        count += 1
        remaining &= ~comp
    return count


@njit(cache=True)
def topo_count_6(mask):
    """Number of 6-connected components of the punctured 18-neighborhood
    that contain at least one face neighbor of the center."""
    members = mask & N18_MASK
    count = 0
    remaining = members
    while remaining != 0:
        seed = remaining & (-remaining)
        comp = seed
        frontier = seed
        while frontier != 0:
            grown = np.int64(0)
            for i in range(27):
                if frontier & (np.int64(1) << i):
                    grown |= ADJ6[i]
            grown &= members & ~comp
            comp |= grown
            frontier = grown
        if comp & N6_MASK:
            count += 1
        remaining &= ~comp
    return count


@njit(cache=True)
def gather_block_mask(flags, p, block_offsets):
    """27-bit mask of which block positions around flat index p are set.

    The center bit is included; callers that want the punctured
    neighborhood mask it out via the region masks.
    """
    mask = np.int64(0)
    for i in range(27):
        if flags[p + block_offsets[i]]:
            mask |= np.int64(1) << i
    return mask


@njit(cache=True)
def bfs_fill(dist, allowed, sources, offsets, queue):
    """Multi-source breadth-first distance over a flat, ghost-padded grid.

    dist must come in filled with -1; allowed is 0 on the ghost border.
    Returns the number of reached voxels.  Deterministic: sources are
    consumed in the given order, neighbors in offset order.
    """
    head = 0
    tail = 0
    for k in range(sources.shape[0]):
        s = sources[k]
        if allowed[s] and dist[s] != 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        p = queue[head]
        head += 1
        d = dist[p] + 1
        for i in range(offsets.shape[0]):
            q = p + offsets[i]
            if allowed[q] and dist[q] < 0:
                dist[q] = d
                queue[tail] = q
                tail += 1
    return tail


@njit(cache=True)
def carve_holes(obj, carved, seen, dist, bucket_head, bucket_tail, queue,
                shell, object_offsets, block_offsets, complement_conn,
                max_hole_size):
    """Farthest-first carve of a filled box down to the object plus the thin
    surfaces that span its tunnels.

    obj / carved / seen are flat uint8 over the ghost-padded box; the ghost
    border starts carved and seen so it acts as already-removed outside and
    never enters the queue.  dist holds the object distance map (-1 on the
    ghost).  bucket_head/bucket_tail are the per-distance FIFO cursors into
    queue, pre-sized so each voxel is enqueued exactly once at its own
    distance.  Returns (pushed, popped).
    """
    current = -1
    pushed = 0
    for k in range(shell.shape[0]):
        s = shell[k]
        d = dist[s]
        queue[bucket_tail[d]] = s
        bucket_tail[d] += 1
        seen[s] = 1
        pushed += 1
        if d > current:
            current = d
    popped = 0
    while True:
        while current >= 0 and bucket_head[current] == bucket_tail[current]:
            current -= 1
        if current < 0:
            break
        p = queue[bucket_head[current]]
        bucket_head[current] += 1
        popped += 1
        if obj[p] == 0:
            mask = gather_block_mask(carved, p, block_offsets)
            if complement_conn == 26:
                separating = topo_count_26(mask) >= 2
            else:
                separating = topo_count_6(mask) >= 2
            keep = separating and (max_hole_size == 0
                                   or 2 * dist[p] <= max_hole_size)
            if not keep:
                carved[p] = 1
        for i in range(object_offsets.shape[0]):
            q = p + object_offsets[i]
            if seen[q] == 0:
                seen[q] = 1
                d = dist[q]
                queue[bucket_tail[d]] = q
                bucket_tail[d] += 1
                pushed += 1
                if d > current:
                    current = d
    return pushed, popped


def flat_offsets(connectivity: int, nx: int, ny: int) -> np.ndarray:
    """Flat-index deltas for the given connectivity on an (nx, ny, *) grid."""
    offs = OFFSETS[connectivity]
    return offs[:, 0] + nx * (offs[:, 1] + ny * offs[:, 2])


def flat_block_offsets(nx: int, ny: int) -> np.ndarray:
    """Flat-index deltas of all 27 block positions, in bit-index order."""
    out = np.empty(27, dtype=np.int64)
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                out[_block_index(dx, dy, dz)] = dx + nx * (dy + ny * dz)
    return out


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    n = 27
    allowed = np.zeros(n, dtype=np.uint8)
    allowed[13] = 1
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.zeros(n, dtype=np.int32)
    src = np.asarray([13], dtype=np.int32)
    bfs_fill(dist, allowed, src, flat_offsets(6, 3, 3), queue)
    obj = np.zeros(n, dtype=np.uint8)
    obj[13] = 1
    carved = np.ones(n, dtype=np.uint8)
    carved[13] = 0
    seen = np.ones(n, dtype=np.uint8)
    seen[13] = 0
    d = np.zeros(n, dtype=np.int32)
    heads = np.zeros(2, dtype=np.int64)
    tails = np.zeros(2, dtype=np.int64)
    shell = np.asarray([13], dtype=np.int32)
    carve_holes(obj, carved, seen, d, heads, tails, queue, shell,
                flat_offsets(6, 3, 3), flat_block_offsets(3, 3), 26, 0)
    topo_count_6(np.int64(N6_MASK))
