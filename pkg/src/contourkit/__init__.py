"""Voxel-volume contouring toolkit.

Core pieces: a normalized density volume model, direct volume rendering with
1D transfer functions, 2D/3D brush delineation over one shared label volume,
inter-slice interpolation, evaluation metrics (overlap, timing, gaze
attention), project persistence with deterministic session replay, an HTTP
service and a CLI.
"""

from .annotate import (BrushMode, BrushStroke, BrushTool, LabelVolume,
                       apply_stroke, load_mask, mask_slice, paint_disc,
                       paint_sphere, save_mask)
from .contours import extract_contours, polygon_area, rasterize_polygons
from .geom import (Pose, apply_rotation, set_translation,
                   shortest_segment_midpoint)
from .interp import SignedDistanceField, interpolate_slices, signed_distance
from .metrics import (angular_speed, attention_series, dsc, filter_saccades,
                      gaze_report, temporal_metrics)
from .render import (Camera, Ray, cast_ray, composite_front_to_back,
                     render_image)
from .session import GazeSample, HitTarget, SessionRecord, parse_session_jsonl
from .store import Project, load_project, replay_session, save_project
from .transfer import RGBA, TransferFunction, grayscale_ramp, tf_eval
from .volume import (Axis, DensityWindow, Slice2D, Volume, apply_window,
                     extract_slice, load_volume, normalize_minmax,
                     sample_trilinear, save_volume, world_to_voxel)

__version__ = "0.1.0"
