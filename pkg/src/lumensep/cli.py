"""Command-line interface over the pipeline.

Every run prints a line-oriented key=value report to stdout.  Exit codes:
0 success, 2 validation/precondition error, 3 lumens not separated,
4 file I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .core import BinaryVolume, ConnectivityPair, Dims, GrayVolume, LabelVolume
from .errors import (DisconnectedError, LumensNotSeparatedError,
                     ValidationError, VolumeIOError)
from .holes import ClosingParams, close_holes
from .morphology import IntensityInterval, region_grow
from .pipeline import (PHANTOM_KINDS, PipelineConfig, build_cartography,
                       expand_flap, extract_flap, make_phantom, run_pipeline,
                       separate_lumens)
from . import volio

_KIND_BY_NAME = {"mask": volio.KIND_MASK, "gray": volio.KIND_GRAY,
                 "label": volio.KIND_LABEL}


def _coord(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(int(p) for p in parts)


def _pair(text: str) -> ConnectivityPair:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected n,n̄ such as 6,26, got {text!r}")
    return ConnectivityPair(int(parts[0]), int(parts[1]))


def _window(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return int(parts[0]), int(parts[1])


def _closing_params(pair: ConnectivityPair, max_hole_size: int,
                    margin: int) -> ClosingParams:
    metric = {6: "d6", 26: "d26"}[pair.object]
    return ClosingParams(pair=pair, metric=metric,
                         max_hole_size=max_hole_size, margin=margin)


def _expect(volume, cls, what: str):
    if not isinstance(volume, cls):
        raise ValidationError(
            f"{what} must be a {cls.__name__}, got {type(volume).__name__}")
    return volume


def _report(pairs) -> None:
    for key, value in pairs:
        print(f"{key}={value}")


def parse_config(path) -> PipelineConfig:
    """Line-oriented key=value pipeline configuration.

    Keys: seed (repeatable, x,y,z), low, high, close_n, pair (e.g. 6,26),
    max_hole_size, margin, crop_lo, crop_hi.
    """
    seeds = []
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValidationError(
                        f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key == "seed":
                    seeds.append(_coord(value))
                else:
                    values[key] = value
    except OSError as exc:
        raise VolumeIOError(f"cannot read config {path}: {exc}") from exc
    missing = {"low", "high", "close_n"} - values.keys()
    if missing:
        raise ValidationError(f"config {path} missing keys: {sorted(missing)}")
    try:
        pair = _pair(values.get("pair", "6,26"))
    except argparse.ArgumentTypeError as exc:
        raise ValidationError(str(exc)) from exc
    closing = _closing_params(pair,
                              int(values.get("max_hole_size", "0")),
                              int(values.get("margin", "2")))
    crop = None
    if "crop_lo" in values or "crop_hi" in values:
        if not ("crop_lo" in values and "crop_hi" in values):
            raise ValidationError("crop_lo and crop_hi must be given together")
        crop = (_coord(values["crop_lo"]), _coord(values["crop_hi"]))
    return PipelineConfig(
        close_iterations=int(values["close_n"]),
        closing=closing,
        grow_interval=IntensityInterval(int(values["low"]), int(values["high"])),
        seeds=seeds,
        crop=crop,
    )


def write_config(path, cfg: PipelineConfig) -> None:
    lines = [f"low = {cfg.grow_interval.low}",
             f"high = {cfg.grow_interval.high}",
             f"close_n = {cfg.close_iterations}",
             f"pair = {cfg.closing.pair.object},{cfg.closing.pair.complement}",
             f"max_hole_size = {cfg.closing.max_hole_size}",
             f"margin = {cfg.closing.margin}"]
    lines += [f"seed = {x},{y},{z}" for x, y, z in cfg.seeds]
    if cfg.crop is not None:
        (lx, ly, lz), (hx, hy, hz) = cfg.crop
        lines += [f"crop_lo = {lx},{ly},{lz}", f"crop_hi = {hx},{hy},{hz}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_phantom(args) -> int:
    from .pipeline import phantom_config
    dims = Dims(*args.dims) if args.dims else None
    phantom = make_phantom(args.kind, size=args.size, gap=args.gap,
                           aperture=args.aperture, blood=args.blood,
                           wall=args.wall, background=args.background,
                           dims=dims)
    os.makedirs(args.out, exist_ok=True)
    volio.write_volume(os.path.join(args.out, "gray.lvol"), phantom.gray)
    for name, vol in (("truth_lumen1", phantom.truth_lumen1),
                      ("truth_lumen2", phantom.truth_lumen2),
                      ("truth_tear", phantom.truth_tear)):
        volio.write_volume(os.path.join(args.out, f"{name}.lvol"), vol)
    write_config(os.path.join(args.out, "pipeline.cfg"),
                 phantom_config(phantom))
    report = [("kind", args.kind),
              ("dims", "{},{},{}".format(*phantom.gray.dims.shape[::-1])),
              ("seeds", ";".join(f"{x},{y},{z}" for x, y, z in phantom.seeds)),
              ("close_n", phantom.close_n)]
    if phantom.probe_a is not None:
        probe_path = os.path.join(args.out, "probes.txt")
        with open(probe_path, "w", encoding="ascii") as fh:
            fh.write("{} {} {}\n{} {} {}\n".format(*phantom.probe_a,
                                                   *phantom.probe_b))
        report.append(("probes", probe_path))
    _report(report)
    return 0


def _cmd_segment(args) -> int:
    gray = _expect(volio.read_volume(args.input), GrayVolume, "--in")
    mask = region_grow(gray, args.seed,
                       IntensityInterval(args.low, args.high),
                       args.connectivity)
    volio.write_volume(args.out, mask)
    _report([("lumens_voxels", mask.count())])
    return 0


def _cmd_flap(args) -> int:
    lumens = _expect(volio.read_volume(args.lumens), BinaryVolume, "--lumens")
    flap = extract_flap(lumens, args.close_n)
    volio.write_volume(args.out, flap)
    _report([("flap_voxels", flap.count())])
    return 0


def _cmd_close_holes(args) -> int:
    mask = _expect(volio.read_volume(args.input), BinaryVolume, "--in")
    params = _closing_params(args.pair, args.max_hole_size, args.margin)
    result = close_holes(mask, params)
    volio.write_volume(args.out_filled, result.filled)
    volio.write_volume(args.out_surfaces, result.surfaces)
    _report([("filled_voxels", result.filled.count()),
             ("surface_voxels", result.surfaces.count()),
             ("processed_voxels", result.popped)])
    return 0


def _cmd_separate(args) -> int:
    lumens = _expect(volio.read_volume(args.lumens), BinaryVolume, "--lumens")
    tears = _expect(volio.read_volume(args.tears), BinaryVolume, "--tears")
    result = separate_lumens(lumens, tears)
    volio.write_volume(args.out, result.labels)
    _report([("components", result.component_count),
             ("discarded_voxels", result.discarded_voxels)])
    return 0


def _cmd_cartography(args) -> int:
    labels = _expect(volio.read_volume(args.lumens), LabelVolume, "--lumens")
    flap = _expect(volio.read_volume(args.flap), BinaryVolume, "--flap")
    tears = _expect(volio.read_volume(args.tears), BinaryVolume, "--tears")
    carto = build_cartography(labels, flap, tears)
    volio.write_volume(args.out, carto)
    _report([("label_values", len(set(carto.data.ravel().tolist())))])
    return 0


def _cmd_expand_flap(args) -> int:
    flap = _expect(volio.read_volume(args.flap), BinaryVolume, "--flap")
    lumens = _expect(volio.read_volume(args.lumens), BinaryVolume, "--lumens")
    expanded = expand_flap(flap, lumens, args.a, args.b, args.metric)
    volio.write_volume(args.out, expanded)
    _report([("flap_voxels", expanded.count()),
             ("added_voxels", expanded.count() - flap.count())])
    return 0


def _cmd_run(args) -> int:
    gray = _expect(volio.read_volume(args.gray), GrayVolume, "--gray")
    cfg = parse_config(args.config)
    start = time.perf_counter()
    result = run_pipeline(gray, cfg)
    total = time.perf_counter() - start
    os.makedirs(args.out, exist_ok=True)
    volio.write_volume(os.path.join(args.out, "lumens.lvol"), result.lumens)
    volio.write_volume(os.path.join(args.out, "flap.lvol"), result.flap)
    volio.write_volume(os.path.join(args.out, "tears.lvol"), result.tears)
    volio.write_volume(os.path.join(args.out, "labels.lvol"), result.labels)
    volio.write_volume(os.path.join(args.out, "cartography.lvol"),
                       result.cartography)
    report = [("lumens_voxels", result.lumens.count()),
              ("flap_voxels", result.flap.count()),
              ("tear_voxels", result.tears.count()),
              ("lumen1_voxels", int((result.labels.data == 1).sum())),
              ("lumen2_voxels", int((result.labels.data == 2).sum())),
              ("components", result.component_count),
              ("discarded_voxels", result.discarded_voxels)]
    report += [(f"stage_{name}_seconds", f"{seconds:.3f}")
               for name, seconds in result.timings.items()]
    report.append(("total_seconds", f"{total:.3f}"))
    _report(report)
    return 0


def _cmd_export_slice(args) -> int:
    volume = volio.read_volume(args.input)
    volio.export_slice(volume, args.axis, args.index, args.out,
                       window=args.window)
    _report([("slice", args.out)])
    return 0


def _cmd_export_points(args) -> int:
    volume = volio.read_volume(args.input)
    volio.export_points(volume, args.out, label=args.label)
    _report([("points", args.out)])
    return 0


def _cmd_import_raw(args) -> int:
    volume = volio.import_raw(args.raw, Dims(*args.dims),
                              _KIND_BY_NAME[args.kind])
    volio.write_volume(args.out, volume)
    _report([("imported", args.out)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lumensep",
        description="Separate aortic-dissection lumens by materializing "
                    "intimal tears as thin hole-filling surfaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic test volume")
    p.add_argument("--kind", required=True, choices=PHANTOM_KINDS)
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--gap", type=int, default=3)
    p.add_argument("--aperture", type=int, default=5)
    p.add_argument("--blood", type=int, default=300)
    p.add_argument("--wall", type=int, default=60)
    p.add_argument("--background", type=int, default=-50)
    p.add_argument("--dims", type=_coord, default=None,
                   help="explicit nx,ny,nz instead of --size cube")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("segment", help="seeded region growing")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--seed", type=_coord, action="append", required=True)
    p.add_argument("--low", type=int, required=True)
    p.add_argument("--high", type=int, required=True)
    p.add_argument("--connectivity", type=int, default=26, choices=(6, 26))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("flap", help="closing minus lumens")
    p.add_argument("--lumens", required=True)
    p.add_argument("--close-n", dest="close_n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_flap)

    p = sub.add_parser("close-holes", help="materialize tunnel-filling surfaces")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--pair", type=_pair, default=ConnectivityPair(6, 26))
    p.add_argument("--max-hole-size", dest="max_hole_size", type=int, default=0)
    p.add_argument("--margin", type=int, default=2)
    p.add_argument("--out-filled", dest="out_filled", required=True)
    p.add_argument("--out-surfaces", dest="out_surfaces", required=True)
    p.set_defaults(func=_cmd_close_holes)

    p = sub.add_parser("separate", help="cut lumens by the tear surfaces")
    p.add_argument("--lumens", required=True)
    p.add_argument("--tears", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_separate)

    p = sub.add_parser("cartography", help="combine stages into one label volume")
    p.add_argument("--lumens", required=True, help="separated lumen labels")
    p.add_argument("--flap", required=True)
    p.add_argument("--tears", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cartography)

    p = sub.add_parser("run", help="full pipeline from a gray volume")
    p.add_argument("--gray", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("expand-flap", help="add a shortest-path rim over an "
                                           "edge tear")
    p.add_argument("--flap", required=True)
    p.add_argument("--lumens", required=True)
    p.add_argument("--a", type=_coord, required=True)
    p.add_argument("--b", type=_coord, required=True)
    p.add_argument("--metric", default="d26", choices=("d6", "d18", "d26"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_expand_flap)

    p = sub.add_parser("export-slice", help="write one cross-section as PGM")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--axis", default="z", choices=("x", "y", "z"))
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_slice)

    p = sub.add_parser("export-points", help="write member voxels as text")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--label", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_points)

    p = sub.add_parser("import-raw", help="wrap a headerless raw dump")
    p.add_argument("--raw", required=True)
    p.add_argument("--dims", type=_coord, required=True)
    p.add_argument("--kind", required=True, choices=sorted(_KIND_BY_NAME))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_import_raw)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LumensNotSeparatedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, DisconnectedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VolumeIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
