"""Axis-wise fractal dimension of binary shapes.

The estimator partitions the volume into slabs of thickness r along one
axis only (full cross-section in the other two), counts slabs that touch
foreground, and fits ln N(r) against -ln r by ordinary least squares.
The slope, clamped to [0, 1], is the directional fractal dimension: it
approaches 1 for shapes that span the axis continuously and drops toward
0 for shapes concentrated in a few slabs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateShapeError, EmptyShapeError
from .voxgrid import AXES, NP_AXIS, BinaryMask, LabelVolume, extract_class, require_foreground

ScaleMode = str  # "all" or "pow2"


def occupancy(mask: BinaryMask, axis: str) -> np.ndarray:
    """1D slab occupancy along an axis: entry i is True when the plane at
    index i contains any foreground.
    """
    np_axis = _np_axis(axis)
    others = tuple(a for a in range(3) if a != np_axis)
    return mask.data.any(axis=others)


def _np_axis(axis: str) -> int:
    if axis not in NP_AXIS:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    return NP_AXIS[axis]


def count_slabs(mask: BinaryMask, axis: str, r: int) -> int:
    """Number of thickness-r slabs along an axis containing foreground.

    The last slab may be thinner when r does not divide the extent.
    r must satisfy 2 <= r <= extent // 2.
    """
    occ = occupancy(mask, axis)
    extent = occ.shape[0]
    if not (2 <= r <= extent // 2):
        raise ValueError(
            f"slab thickness {r} outside [2, {extent // 2}] for axis {axis} of extent {extent}"
        )
    starts = np.arange(0, extent, r)
    per_slab = np.add.reduceat(occ.astype(np.int64), starts)
    return int((per_slab > 0).sum())


def scale_list(extent: int, scales: ScaleMode = "all") -> list[int]:
    """Admissible slab thicknesses for an axis extent.

    "all" lists every integer in [2, extent // 2]; "pow2" keeps only the
    powers of two in that range, which removes the ceil-induced stairstep
    from the fit on axis-aligned solid shapes.
    """
    if extent < 4:
        raise DegenerateShapeError(f"axis extent {extent} admits no slab scale (need at least 4)")
    top = extent // 2
    if scales == "all":
        return list(range(2, top + 1))
    if scales == "pow2":
        out = []
        r = 2
        while r <= top:
            out.append(r)
            r *= 2
        return out
    raise ValueError(f"scales must be 'all' or 'pow2', got {scales!r}")


@dataclass(frozen=True)
class AxisFit:
    """Fractal fit along one axis.

    points holds the (ln N(r), -ln r) pairs fed to the regression. fd is
    the OLS slope clamped to [0, 1]; raw_slope keeps the unclamped value.
    r_squared is 1.0 by convention when the points are collinear,
    including the constant case, and 0.0 when a single scale leaves the
    slope undefined (fd then reports 0). low_confidence marks fits with
    fewer than 3 scales.
    """

    axis: str
    fd: float
    raw_slope: float
    r_squared: float
    scales: tuple[int, ...]
    counts: tuple[int, ...]
    points: tuple[tuple[float, float], ...]
    low_confidence: bool


def fractal_dimension(mask: BinaryMask, axis: str, scales: ScaleMode = "all") -> AxisFit:
    """Directional fractal dimension of a mask along one axis."""
    require_foreground(mask, "fractal_dimension")
    np_axis = _np_axis(axis)
    extent = mask.data.shape[np_axis]
    rs = scale_list(extent, scales)
    counts = [count_slabs(mask, axis, r) for r in rs]
    xs = np.array([-math.log(r) for r in rs])
    ys = np.array([math.log(n) for n in counts])

    if len(rs) == 1:
        slope = 0.0
        r_squared = 0.0
    else:
        slope, intercept = np.polyfit(xs, ys, 1)
        fitted = slope * xs + intercept
        ss_res = float(((ys - fitted) ** 2).sum())
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r_squared = 1.0 if ss_tot < 1e-12 else 1.0 - ss_res / ss_tot

    return AxisFit(
        axis=axis,
        fd=float(min(1.0, max(0.0, slope))),
        raw_slope=float(slope),
        r_squared=float(r_squared),
        scales=tuple(rs),
        counts=tuple(counts),
        points=tuple((float(y), float(x)) for x, y in zip(xs, ys)),
        low_confidence=len(rs) < 3,
    )


@dataclass(frozen=True)
class FractalReport:
    """Per-axis fractal fits for one shape."""

    fits: dict[str, AxisFit]

    @property
    def fd(self) -> tuple[float, float, float]:
        return tuple(self.fits[a].fd for a in AXES)

    @property
    def r_squared(self) -> tuple[float, float, float]:
        return tuple(self.fits[a].r_squared for a in AXES)

    @property
    def low_confidence(self) -> bool:
        return any(self.fits[a].low_confidence for a in AXES)

    def to_dict(self) -> dict:
        return {
            "fd": {a: self.fits[a].fd for a in AXES},
            "raw_slope": {a: self.fits[a].raw_slope for a in AXES},
            "r_squared": {a: self.fits[a].r_squared for a in AXES},
            "scales": {a: list(self.fits[a].scales) for a in AXES},
            "counts": {a: list(self.fits[a].counts) for a in AXES},
            "low_confidence": self.low_confidence,
        }


def report_for_mask(mask: BinaryMask, scales: ScaleMode = "all") -> FractalReport:
    """Fractal fits along x, y and z for one mask."""
    return FractalReport({a: fractal_dimension(mask, a, scales) for a in AXES})


def fractal_report(
    volume: LabelVolume | BinaryMask,
    class_selection: str | list[int] = "foreground_union",
    scales: ScaleMode = "all",
) -> FractalReport | dict[int, FractalReport]:
    """Fractal fits for a labelled volume.

    class_selection picks the shape: "foreground_union" merges all
    non-zero labels into one mask and returns a single report;
    "per_class" returns a map with one report per label present; an
    explicit id list returns a map over those ids and raises
    EmptyShapeError for ids that do not occur.
    """
    if isinstance(volume, BinaryMask):
        return report_for_mask(volume, scales)
    if class_selection == "foreground_union":
        union = BinaryMask(volume.data > 0, volume.spacing)
        return report_for_mask(union, scales)
    if class_selection == "per_class":
        ids = volume.labels()
    else:
        ids = [int(c) for c in class_selection]
    out: dict[int, FractalReport] = {}
    for cid in ids:
        mask, found = extract_class(volume, cid)
        if not found:
            raise EmptyShapeError(f"class {cid} has no voxels in this volume")
        out[cid] = report_for_mask(mask, scales)
    return out
