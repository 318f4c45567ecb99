"""End-to-end lumen separation and the synthetic phantoms used to test it.

Stages: seeded region growing extracts the connected lumens from the gray
volume; a morphological closing minus the lumens yields the wall between
them (the flap); hole closing on the flap materializes each tear as a thin
filling surface; subtracting those surfaces from the lumens disconnects
them; the final cartography presents background, the two lumens, the flap
and the tear surfaces in one label volume.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (BinaryVolume, ConnectivityPair, Coord, Dims, GrayVolume,
                   LabelVolume, complement, crop_center, label_components,
                   pad, set_difference, set_union)
from .distance import path_mask, shortest_path
from .errors import LumensNotSeparatedError, ValidationError
from .holes import ClosingParams, surfaces_only, unlimited
from .morphology import (IntensityInterval, StructuringElement,
                         morphological_close, region_grow)

CARTOGRAPHY_LABELS = {
    "background": 0,
    "lumen1": 1,
    "lumen2": 2,
    "flap": 3,
    "tears": 4,
}

PHANTOM_KINDS = ("two_tubes_slot", "thin_lumen_big_tear", "edge_tear", "torus")


@dataclass
class PipelineConfig:
    """Parameters of a full run; crop is an optional (lo, hi) voxel box,
    lo inclusive and hi exclusive, applied before everything else (seeds
    are given in the uncropped frame)."""

    close_iterations: int
    closing: ClosingParams
    grow_interval: IntensityInterval
    seeds: list[Coord]
    crop: tuple[Coord, Coord] | None = None

    def __post_init__(self):
        if self.close_iterations < 1:
            raise ValidationError("close_iterations must be >= 1")
        if not self.seeds:
            raise ValidationError("at least one seed is required")


@dataclass
class SeparationResult:
    """Labeled lumens (labels 1 and 2 only), the raw component count of the
    cut lumens, and how many voxels of smaller fragments were dropped."""

    labels: LabelVolume
    component_count: int
    discarded_voxels: int


@dataclass
class PipelineResult:
    cartography: LabelVolume
    lumens: BinaryVolume
    flap: BinaryVolume
    tears: BinaryVolume
    labels: LabelVolume
    component_count: int
    discarded_voxels: int
    timings: dict = field(default_factory=dict)


@dataclass
class Phantom:
    """Synthetic test volume with analytic ground truth.

    probe_a/probe_b are only set for the edge-tear scenario: endpoints of
    the flap-expansion path over the open side of the tear.  close_n and
    grow_interval are the settings the scenario was built for.
    """

    gray: GrayVolume
    truth_lumen1: BinaryVolume
    truth_lumen2: BinaryVolume
    truth_tear: BinaryVolume
    seeds: list[Coord]
    close_n: int
    grow_interval: IntensityInterval
    probe_a: Coord | None = None
    probe_b: Coord | None = None


def dice(a: BinaryVolume, b: BinaryVolume) -> float:
    """Set-overlap score 2|A∩B| / (|A|+|B|); 1.0 for two empty sets."""
    if a.dims != b.dims:
        raise ValidationError(f"dims mismatch: {a.dims} vs {b.dims}")
    total = a.count() + b.count()
    if total == 0:
        return 1.0
    inter = int((a.data & b.data).sum())
    return 2.0 * inter / total


def extract_flap(lumens: BinaryVolume, n: int) -> BinaryVolume:
    """Morphological closing (6-ball, n iterations) minus the lumens: the
    material that separates them.  Works in a frame padded by n so the
    closing is border-free, then crops back."""
    if lumens.is_empty():
        raise ValidationError("extract_flap requires nonempty lumens")
    if n < 1:
        raise ValidationError("closing depth n must be >= 1")
    work = pad(lumens, n)
    closed = morphological_close(work, StructuringElement(6), n)
    return crop_center(set_difference(closed, work), n)


def tear_surfaces(flap: BinaryVolume, closing: ClosingParams,
                  engine: str = "compiled") -> BinaryVolume:
    """Filling surfaces of the flap's tunnels, one per tear; the hole-size
    threshold is lifted so connections of any size are materialized."""
    if flap.is_empty():
        raise ValidationError("tear_surfaces requires a nonempty flap")
    return surfaces_only(flap, unlimited(closing), engine)


def separate_lumens(lumens: BinaryVolume, tears: BinaryVolume) -> SeparationResult:
    """Subtract the tear surfaces and keep the two largest 26-components
    as labels 1 and 2 (ties broken by first-encounter order); smaller
    fragments are cleared and reported as discarded."""
    if lumens.is_empty():
        raise ValidationError("separate_lumens requires nonempty lumens")
    cut = set_difference(lumens, tears)
    labeled, count = label_components(cut, 26)
    if count < 2:
        raise LumensNotSeparatedError(
            f"lumens not separated: {count} component(s) after subtracting "
            f"tear surfaces (a tear on the lumen edge may need expand_flap)")
    sizes = np.bincount(labeled.data.ravel(), minlength=count + 1)
    order = sorted(range(1, count + 1), key=lambda lab: (-int(sizes[lab]), lab))
    keep1, keep2 = order[0], order[1]
    discarded = int(sizes[order[2:]].sum()) if count > 2 else 0
    out = np.zeros(labeled.data.shape, dtype=np.uint32)
    out[labeled.data == keep1] = 1
    out[labeled.data == keep2] = 2
    return SeparationResult(LabelVolume(lumens.dims, out, lumens.spacing),
                            count, discarded)


def expand_flap(flap: BinaryVolume, lumens: BinaryVolume, a: Coord, b: Coord,
                metric: str = "d26") -> BinaryVolume:
    """Union the flap with the shortest path from a to b through the
    complement of the lumens; used to close the open rim of a tear that
    sits on the lumen edge."""
    if flap.dims != lumens.dims:
        raise ValidationError(f"dims mismatch: {flap.dims} vs {lumens.dims}")
    outside = complement(lumens)
    for name, p in (("a", a), ("b", b)):
        lumens.dims.require(p)
        if lumens.get(p):
            raise ValidationError(
                f"expansion endpoint {name}={tuple(p)} lies inside the lumens")
    path = shortest_path(outside, a, b, metric)
    return set_union(flap, path_mask(flap.dims, path))


def build_cartography(lumens_labeled: LabelVolume, flap: BinaryVolume,
                      tears: BinaryVolume) -> LabelVolume:
    """Combine the stages into one label volume with priority
    tears(4) > flap(3) > lumens(1, 2) > background(0)."""
    if not (lumens_labeled.dims == flap.dims == tears.dims):
        raise ValidationError(
            f"dims mismatch: {lumens_labeled.dims} / {flap.dims} / {tears.dims}")
    if int(lumens_labeled.data.max(initial=0)) > 2:
        raise ValidationError("lumen labels must be within {0, 1, 2}")
    out = lumens_labeled.data.copy()
    out[flap.data] = 3
    out[tears.data] = 4
    return LabelVolume(lumens_labeled.dims, out, lumens_labeled.spacing)


def crop_volume(gray: GrayVolume, lo: Coord, hi: Coord) -> GrayVolume:
    """Axis-aligned crop, lo inclusive, hi exclusive."""
    d = gray.dims
    (lx, ly, lz), (hx, hy, hz) = lo, hi
    if not (0 <= lx < hx <= d.nx and 0 <= ly < hy <= d.ny and 0 <= lz < hz <= d.nz):
        raise ValidationError(f"crop box {lo}..{hi} invalid for dims {d}")
    data = gray.data[lz:hz, ly:hy, lx:hx].copy()
    return GrayVolume(Dims(hx - lx, hy - ly, hz - lz), data, gray.spacing)


def run_pipeline(gray: GrayVolume, cfg: PipelineConfig,
                 engine: str = "compiled") -> PipelineResult:
    """Crop, grow lumens from the seeds, extract the flap, materialize the
    tears, separate the lumens and assemble the cartography.  Errors raised
    by a stage are re-raised with the stage name prefixed."""
    timings = {}

    def timed(stage, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except (ValidationError, LumensNotSeparatedError) as exc:
            raise type(exc)(f"[{stage}] {exc}") from exc
        timings[stage] = time.perf_counter() - start
        return result

    seeds = list(cfg.seeds)
    if cfg.crop is not None:
        lo, hi = cfg.crop
        gray = timed("crop", crop_volume, gray, lo, hi)
        seeds = [(x - lo[0], y - lo[1], z - lo[2]) for x, y, z in seeds]
        for s in seeds:
            if not gray.dims.contains(s):
                raise ValidationError(
                    f"[crop] seed {tuple(s)} falls outside the crop box")
    lumens = timed("region_grow", region_grow, gray, seeds,
                   cfg.grow_interval, 26)
    if lumens.is_empty():
        raise ValidationError("[region_grow] produced an empty lumen mask")
    flap = timed("extract_flap", extract_flap, lumens, cfg.close_iterations)
    if flap.is_empty():
        raise ValidationError("[extract_flap] produced an empty flap")
    tears = timed("tear_surfaces", tear_surfaces, flap, cfg.closing, engine)
    separation = timed("separate_lumens", separate_lumens, lumens, tears)
    cartography = timed("cartography", build_cartography,
                        separation.labels, flap, tears)
    return PipelineResult(
        cartography=cartography, lumens=lumens, flap=flap, tears=tears,
        labels=separation.labels, component_count=separation.component_count,
        discarded_voxels=separation.discarded_voxels, timings=timings)


# ---------------------------------------------------------------------------
# phantoms


def _box(data: np.ndarray, x0, x1, y0, y1, z0, z1, value=True):
    data[z0:z1, y0:y1, x0:x1] = value


def _tube_layout(dims: Dims, gap: int, pad_width: int):
    """Shared two-tube geometry: returns (x0, w, y0, z0, z1, yc, zc)."""
    nx, ny, nz = dims.nx, dims.ny, dims.nz
    w = max(6, min(nx // 4, (nx - gap - 2 * pad_width) // 2))
    total = 2 * w + gap
    if total + 2 * pad_width > nx or w + 2 * pad_width > ny \
            or nz <= 2 * pad_width:
        raise ValidationError(
            f"dims {dims} too small for two tubes with gap {gap}")
    x0 = (nx - total) // 2
    y0 = (ny - w) // 2
    z0, z1 = pad_width, nz - pad_width
    return x0, w, y0, z0, z1, ny // 2, nz // 2


def _render_gray(dims: Dims, blood_set, wall_set, blood, wall, background):
    gray = np.full(dims.shape, background, dtype=np.int16)
    gray[wall_set] = wall
    gray[blood_set] = blood
    return GrayVolume(dims, gray)


def _two_tubes(dims: Dims, gap: int, aperture: int, blood: int, wall: int,
               background: int, thin_x: int | None, tear_at_edge: bool):
    pad_width = 6
    x0, w, y0, z0, z1, yc, zc = _tube_layout(dims, gap, pad_width)
    if aperture < 1:
        raise ValidationError("aperture must be >= 1")
    if aperture > w - 2:
        raise ValidationError(
            f"aperture {aperture} too large for tube width {w}")

    tube1 = np.zeros(dims.shape, dtype=bool)
    tube2 = np.zeros(dims.shape, dtype=bool)
    w2 = thin_x if thin_x is not None else w
    gx0, gx1 = x0 + w, x0 + w + gap
    _box(tube1, x0, gx0, y0, y0 + w, z0, z1)
    _box(tube2, gx1, gx1 + w2, y0, y0 + w, z0, z1)

    tear = np.zeros(dims.shape, dtype=bool)
    cz0 = zc - aperture // 2
    if tear_at_edge:
        cy0 = y0 + w - aperture
    else:
        cy0 = yc - aperture // 2
    if cz0 - 1 < z0 or cz0 + aperture + 1 > z1 or cy0 < y0:
        raise ValidationError(
            f"aperture {aperture} does not fit the tube extent")
    _box(tear, gx0, gx1, cy0, cy0 + aperture, cz0, cz0 + aperture)

    wall_set = np.zeros(dims.shape, dtype=bool)
    _box(wall_set, gx0, gx1, y0, y0 + w, z0, z1)
    wall_set &= ~tear

    blood_set = tube1 | tube2 | tear
    seeds = [(x0 + w // 2, yc, zc), (gx1 + w2 // 2, yc, zc)]
    phantom = Phantom(
        gray=_render_gray(dims, blood_set, wall_set, blood, wall, background),
        truth_lumen1=BinaryVolume(dims, tube1),
        truth_lumen2=BinaryVolume(dims, tube2),
        truth_tear=BinaryVolume(dims, tear),
        seeds=seeds,
        close_n=(gap + 1) // 2 + 1,
        grow_interval=IntensityInterval(blood - 100, blood + 100),
    )
    if tear_at_edge:
        x_mid = gx0 + gap // 2
        phantom.probe_a = (x_mid, y0 + w, cz0 - 1)
        phantom.probe_b = (x_mid, y0 + w, cz0 + aperture)
    return phantom


def _torus(dims: Dims, gap: int, aperture: int, blood: int, background: int):
    """Square-section ring in the xy-plane with an aperture x aperture
    tunnel along z."""
    nx, ny, nz = dims.nx, dims.ny, dims.nz
    ring = max(2, gap)
    cx, cy, cz = nx // 2, ny // 2, nz // 2
    hx0, hy0 = cx - aperture // 2, cy - aperture // 2
    ox0, oy0 = hx0 - ring, hy0 - ring
    ox1, oy1 = hx0 + aperture + ring, hy0 + aperture + ring
    tz0, tz1 = cz - ring // 2, cz - ring // 2 + ring
    if ox0 < 2 or oy0 < 2 or ox1 > nx - 2 or oy1 > ny - 2 \
            or tz0 < 2 or tz1 > nz - 2:
        raise ValidationError(
            f"dims {dims} too small for torus with aperture {aperture}")
    solid = np.zeros(dims.shape, dtype=bool)
    _box(solid, ox0, ox1, oy0, oy1, tz0, tz1)
    hole = np.zeros(dims.shape, dtype=bool)
    _box(hole, hx0, hx0 + aperture, hy0, hy0 + aperture, tz0, tz1)
    ring_set = solid & ~hole
    plate = np.zeros(dims.shape, dtype=bool)
    _box(plate, hx0, hx0 + aperture, hy0, hy0 + aperture, cz, cz + 1)
    return Phantom(
        gray=_render_gray(dims, ring_set, np.zeros(dims.shape, dtype=bool),
                          blood, 0, background),
        truth_lumen1=BinaryVolume(dims, ring_set),
        truth_lumen2=BinaryVolume.empty(dims),
        truth_tear=BinaryVolume(dims, plate),
        seeds=[(ox0, oy0 + ring // 2, cz)],
        close_n=1,
        grow_interval=IntensityInterval(blood - 100, blood + 100),
    )


def make_phantom(kind: str, size: int = 96, gap: int = 3, aperture: int = 5,
                 blood: int = 300, wall: int = 60, background: int = -50,
                 dims: Dims | None = None) -> Phantom:
    """Deterministic analytic phantom of the requested scenario.

    two_tubes_slot: two parallel lumens joined through a slot tear.
    thin_lumen_big_tear: one lumen thinner than the tear (the erosion
    baseline destroys it).  edge_tear: the tear touches the lumen edge so
    its contour is open.  torus: a square ring with one tunnel.
    """
    if kind not in PHANTOM_KINDS:
        raise ValidationError(
            f"unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")
    if dims is None:
        if size < 24:
            raise ValidationError("phantom size must be >= 24")
        dims = Dims(size, size, size)
    if gap < 1:
        raise ValidationError("gap must be >= 1")
    if kind == "two_tubes_slot":
        return _two_tubes(dims, gap, aperture, blood, wall, background,
                          thin_x=None, tear_at_edge=False)
    if kind == "thin_lumen_big_tear":
        if aperture < 4:
            raise ValidationError(
                "thin_lumen_big_tear needs aperture >= 4 (tear taller than "
                "the 2-voxel lumen)")
        return _two_tubes(dims, gap, aperture, blood, wall, background,
                          thin_x=2, tear_at_edge=False)
    if kind == "edge_tear":
        return _two_tubes(dims, gap, aperture, blood, wall, background,
                          thin_x=None, tear_at_edge=True)
    return _torus(dims, gap, aperture, blood, background)


def phantom_config(phantom: Phantom,
                   pair=(6, 26)) -> PipelineConfig:
    """Pipeline configuration matching a phantom's construction."""
    metric = {6: "d6", 26: "d26"}[pair[0]]
    return PipelineConfig(
        close_iterations=phantom.close_n,
        closing=ClosingParams(pair=ConnectivityPair(*pair), metric=metric),
        grow_interval=phantom.grow_interval,
        seeds=list(phantom.seeds),
    )
