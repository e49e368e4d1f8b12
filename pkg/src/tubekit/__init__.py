"""Toolkit for tubular structures in 3D medical volumes.

Measures axis-specific fractal dimensions and turns them into patch-size
plans, extracts minimum path-cost skeletons with loss weight maps,
scores segmentations with topology-aware metrics, and generates
deterministic phantoms with analytic centerlines for validation.
"""

from .edt import DistanceField, distance_to_sites, distance_transform
from .errors import (
    DegenerateShapeError,
    EmptyShapeError,
    GridMismatchError,
    TubekitError,
    UndefinedMetricError,
    UnreachableTargetError,
    VolumeFormatError,
)
from .fractal import (
    AxisFit,
    FractalReport,
    count_slabs,
    fractal_dimension,
    fractal_report,
    report_for_mask,
    scale_list,
)
from .metrics import (
    CenterlineFidelity,
    ClassMetrics,
    MetricsReport,
    betti0_error,
    centerline_fidelity,
    cl_dice,
    connected_components,
    dice,
    evaluate,
    hd95,
)
from .mpcskel import (
    DEFAULT_ALPHA1,
    DEFAULT_GAMMA,
    RADIUS_PRESETS,
    CostField,
    RadiusParams,
    Skeleton,
    SkeletonPath,
    combine_weight_maps,
    cost_field,
    default_radius,
    skeleton_label_volume,
    skeletonize,
    skeletonize_multiclass,
    trace_path,
    visitation_radius,
    weight_map,
)
from .patchplan import PatchPlan, rank_and_reassign, snap_to_divisor
from .phantoms import KINDS, Phantom, PhantomSpec, generate, perturb
from .pipeline import PipelineConfig, PipelineSummary, run_pipeline
from .voxgrid import AXES, BinaryMask, LabelVolume, ScalarVolume, extract_class
from .voxio import OrientationIgnoredWarning, read_volume, write_volume

__version__ = "0.1.0"

__all__ = [
    "AXES",
    "AxisFit",
    "BinaryMask",
    "CenterlineFidelity",
    "ClassMetrics",
    "CostField",
    "DEFAULT_ALPHA1",
    "DEFAULT_GAMMA",
    "DegenerateShapeError",
    "DistanceField",
    "EmptyShapeError",
    "FractalReport",
    "GridMismatchError",
    "KINDS",
    "LabelVolume",
    "MetricsReport",
    "OrientationIgnoredWarning",
    "PatchPlan",
    "Phantom",
    "PhantomSpec",
    "PipelineConfig",
    "PipelineSummary",
    "RADIUS_PRESETS",
    "RadiusParams",
    "ScalarVolume",
    "Skeleton",
    "SkeletonPath",
    "TubekitError",
    "UndefinedMetricError",
    "UnreachableTargetError",
    "VolumeFormatError",
    "betti0_error",
    "centerline_fidelity",
    "cl_dice",
    "combine_weight_maps",
    "connected_components",
    "cost_field",
    "count_slabs",
    "default_radius",
    "dice",
    "distance_to_sites",
    "distance_transform",
    "evaluate",
    "extract_class",
    "fractal_dimension",
    "fractal_report",
    "generate",
    "hd95",
    "perturb",
    "rank_and_reassign",
    "read_volume",
    "report_for_mask",
    "run_pipeline",
    "scale_list",
    "skeleton_label_volume",
    "skeletonize",
    "skeletonize_multiclass",
    "snap_to_divisor",
    "trace_path",
    "visitation_radius",
    "weight_map",
    "write_volume",
]
