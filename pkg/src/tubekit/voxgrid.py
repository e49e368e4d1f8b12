"""Volume data model.

Arrays are stored with shape ``(nz, ny, nx)`` in C order, so the x
coordinate varies fastest in memory. Public coordinates are always
``(x, y, z)`` voxel indices and ``dims`` is reported as ``(nx, ny, nz)``.
Physical positions are voxel index times spacing, in millimetres.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import EmptyShapeError, GridMismatchError

Coord = tuple[int, int, int]
Spacing = tuple[float, float, float]

# numpy axis for each named axis, given the (nz, ny, nx) layout
NP_AXIS = {"x": 2, "y": 1, "z": 0}
AXES = ("x", "y", "z")


def _as_spacing(spacing) -> Spacing:
    s = tuple(float(v) for v in spacing)
    if len(s) != 3:
        raise ValueError(f"spacing must have three components, got {len(s)}")
    if any(v <= 0 or not np.isfinite(v) for v in s):
        raise ValueError(f"spacing components must be finite and positive, got {s}")
    return s


@dataclass(frozen=True)
class _Grid:
    """Shared shape/spacing behaviour for the three volume types.

    ``data`` is frozen in place (writeable flag cleared). Pass a copy if
    the source array must stay mutable.
    """

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3D, got {arr.ndim}D")
        if arr.size == 0:
            raise ValueError("volume data must not be empty")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", _as_spacing(self.spacing))

    @property
    def dims(self) -> Coord:
        """Grid extent as (nx, ny, nz)."""
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def voxel_volume(self) -> float:
        """Physical volume of one voxel in cubic millimetres."""
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def index_of(self, x: int, y: int, z: int) -> int:
        """Linear index of a voxel; x varies fastest."""
        nx, ny, nz = self.dims
        if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
            raise IndexError(f"voxel ({x}, {y}, {z}) outside dims {self.dims}")
        return x + nx * (y + ny * z)

    def coord_of(self, index: int) -> Coord:
        """Inverse of :meth:`index_of`."""
        nx, ny, nz = self.dims
        if not (0 <= index < nx * ny * nz):
            raise IndexError(f"linear index {index} outside volume of {nx * ny * nz} voxels")
        x = index % nx
        y = (index // nx) % ny
        z = index // (nx * ny)
        return (x, y, z)

    def same_grid(self, other: "_Grid") -> bool:
        return self.data.shape == other.data.shape and self.spacing == other.spacing

    def require_same_grid(self, other: "_Grid", what: str) -> None:
        if not self.same_grid(other):
            raise GridMismatchError(
                f"{what} requires matching grids: "
                f"dims {self.dims} / spacing {self.spacing} vs "
                f"dims {other.dims} / spacing {other.spacing}"
            )


@dataclass(frozen=True)
class LabelVolume(_Grid):
    """Integer class labels on a voxel grid. 0 is background."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not np.issubdtype(self.data.dtype, np.integer):
            raise ValueError(f"label data must be an integer dtype, got {self.data.dtype}")
        if self.data.size and self.data.min() < 0:
            raise ValueError("label values must be non-negative")

    def labels(self) -> list[int]:
        """Sorted distinct non-zero class ids present in the volume."""
        vals = np.unique(self.data)
        return [int(v) for v in vals if v != 0]

    def class_mask(self, class_id: int) -> "BinaryMask":
        mask, _ = extract_class(self, class_id)
        return mask


@dataclass(frozen=True)
class ScalarVolume(_Grid):
    """Floating point field on a voxel grid (distances, costs, weights).

    Non-finite values are allowed; cost fields use +inf on background.
    """

    def __post_init__(self) -> None:
        super().__post_init__()
        if not np.issubdtype(self.data.dtype, np.floating):
            raise ValueError(f"scalar data must be a float dtype, got {self.data.dtype}")


@dataclass(frozen=True)
class BinaryMask(_Grid):
    """Boolean foreground mask on a voxel grid."""

    def __post_init__(self) -> None:
        if self.data.dtype != np.bool_:
            object.__setattr__(self, "data", np.asarray(self.data) != 0)
        super().__post_init__()

    @property
    def foreground_count(self) -> int:
        return int(self.data.sum())

    def foreground_coords(self) -> np.ndarray:
        """Foreground voxel coordinates as an (n, 3) array of (x, y, z)."""
        zz, yy, xx = np.nonzero(self.data)
        return np.stack([xx, yy, zz], axis=1)

    def iter_foreground(self) -> Iterator[Coord]:
        for x, y, z in self.foreground_coords():
            yield (int(x), int(y), int(z))


def extract_class(volume: LabelVolume, class_id: int) -> tuple[BinaryMask, bool]:
    """Binarize one class of a label volume.

    Returns the mask plus a flag that is False when the class id does not
    occur, in which case the mask is empty. class_id must be positive;
    background cannot be extracted as a shape.
    """
    if class_id <= 0:
        raise ValueError(f"class_id must be a positive integer, got {class_id}")
    data = volume.data == class_id
    return BinaryMask(data, volume.spacing), bool(data.any())


def require_foreground(mask: BinaryMask, what: str) -> None:
    """Raise EmptyShapeError when the mask has no foreground."""
    if not mask.data.any():
        raise EmptyShapeError(f"{what} requires at least one foreground voxel")
