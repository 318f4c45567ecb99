"""Voxel digital-topology toolkit for separating aortic-dissection lumens.

Segments connected lumens from a gray volume by seeded region growing,
extracts the intimal flap by morphological closing, materializes the
intimal tears as thin tunnel-filling surfaces, and subtracts them to
obtain two disconnected lumens plus a cartography label volume.
"""

from .core import (BinaryVolume, ConnectivityPair, Coord, Dims, GrayVolume,
                   LabelVolume, complement, label_components, neighbors,
                   set_difference, set_intersection, set_union,
                   topological_number)
from .distance import (UNREACHED, DistanceMap, distance_map, shortest_path)
from .errors import (DisconnectedError, LumensNotSeparatedError,
                     ValidationError, VolumeIOError)
from .holes import (ClosingParams, ClosingResult, HierarchicalList,
                    close_holes, surfaces_only)
from .morphology import (IntensityInterval, StructuringElement, dilate,
                         erode, morphological_close, morphological_open,
                         region_grow)
from .pipeline import (Phantom, PipelineConfig, PipelineResult,
                       SeparationResult, build_cartography, dice,
                       expand_flap, extract_flap, make_phantom,
                       phantom_config, run_pipeline, separate_lumens,
                       tear_surfaces)
from .volio import (export_points, export_slice, import_raw, read_volume,
                    write_volume)

__version__ = "0.1.0"
