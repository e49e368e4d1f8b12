"""Exact anisotropic Euclidean distance transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .voxgrid import BinaryMask, Coord, ScalarVolume, Spacing, require_foreground


@dataclass(frozen=True)
class DistanceField:
    """Distance-to-background field of a mask, in millimetres.

    field is 0 on background and strictly positive on foreground.
    argmax_voxel is the first deepest voxel in scan order (z outermost,
    x innermost), as an (x, y, z) coordinate.
    """

    field: ScalarVolume
    foreground_count: int
    max_dist: float
    argmax_voxel: Coord


def _squared_distances(occ: np.ndarray, spacing: Spacing) -> np.ndarray:
    """Squared distance to the nearest background voxel centre.

    A mask with no background at all is wrapped in a virtual one-voxel
    background shell, so interior depths stay finite.
    """
    sx, sy, sz = spacing
    if occ.all():
        padded = np.pad(occ, 1, constant_values=False)
        return kernels.edt_sq(padded, sx, sy, sz)[1:-1, 1:-1, 1:-1]
    return kernels.edt_sq(occ, sx, sy, sz)


def distance_transform(mask: BinaryMask) -> DistanceField:
    """Exact Euclidean distance from each foreground voxel to the nearest
    background voxel centre, honouring anisotropic spacing.
    """
    require_foreground(mask, "distance_transform")
    dist = np.sqrt(_squared_distances(mask.data, mask.spacing))
    flat_argmax = int(dist.argmax())
    field = ScalarVolume(dist, mask.spacing)
    return DistanceField(
        field=field,
        foreground_count=mask.foreground_count,
        max_dist=float(dist.max()),
        argmax_voxel=field.coord_of(flat_argmax),
    )


def distance_to_sites(sites: np.ndarray, spacing: Spacing) -> np.ndarray:
    """Distance in mm from every voxel to the nearest True voxel of sites.

    Sites themselves get 0. All entries are inf when sites is empty.
    """
    occ = ~np.asarray(sites, dtype=bool)
    if occ.all():
        return np.full(occ.shape, np.inf)
    sx, sy, sz = spacing
    return np.sqrt(kernels.edt_sq(occ, sx, sy, sz))
