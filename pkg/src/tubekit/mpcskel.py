"""Minimum path-cost skeletonization of tubular shapes.

The skeleton of a shape is grown as a set of cheapest paths over a cost
field that is lowest along the deepest voxels (largest distance to
background), so paths hug the medial axis. Per connected component:

* the anchor is the deepest voxel; the first path runs from the most
  expensive unvisited voxel to the anchor;
* every accepted path voxel spawns a visitation ball whose radius grows
  with depth, and the next seed is the most expensive voxel not yet
  covered by any ball (ties: larger geodesic distance from the anchor,
  then scan order);
* each subsequent path terminates on the first voxel it reaches that is
  already part of the skeleton, which keeps the skeleton connected;
* a trace shorter than beta whose loose end lies within its own
  visitation radius of the existing skeleton is dropped as a stub (its
  balls still count as visited).

The loop ends when every component voxel is visited.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from .edt import DistanceField, distance_to_sites, distance_transform
from .errors import DegenerateShapeError, UnreachableTargetError
from .voxgrid import (
    BinaryMask,
    Coord,
    LabelVolume,
    ScalarVolume,
    Spacing,
    extract_class,
    require_foreground,
)

DEFAULT_ALPHA1 = 1.0e5
DEFAULT_GAMMA = 4.0

# visitation radius presets as (alpha2, beta) factors of the largest
# spacing component: "aorta" for wide single vessels, "airway" for fine
# branching trees
RADIUS_PRESETS: dict[str, tuple[float, float]] = {
    "aorta": (1.8, 4.0),
    "airway": (2.4, 2.0),
}


@dataclass(frozen=True)
class RadiusParams:
    """Visitation ball model R(s) = alpha2 * dist(s) + beta, in mm."""

    alpha2: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha2 < 0 or self.beta < 0 or (self.alpha2 == 0 and self.beta == 0):
            raise ValueError(
                "alpha2 and beta must be non-negative and not both zero, "
                f"got alpha2={self.alpha2}, beta={self.beta}"
            )

    @classmethod
    def from_spacing_max(
        cls, alpha2_factor: float, beta_factor: float, spacing: Spacing
    ) -> "RadiusParams":
        """Scale preset factors by the coarsest spacing component."""
        m = max(spacing)
        return cls(alpha2=alpha2_factor * m, beta=beta_factor * m)

    @classmethod
    def preset(cls, name: str, spacing: Spacing) -> "RadiusParams":
        if name not in RADIUS_PRESETS:
            raise ValueError(f"unknown radius preset {name!r}; expected one of {sorted(RADIUS_PRESETS)}")
        a2, b = RADIUS_PRESETS[name]
        return cls.from_spacing_max(a2, b, spacing)


def default_radius(spacing: Spacing) -> RadiusParams:
    """Package default: the coarse preset, matching the CLI defaults."""
    return RadiusParams.preset("aorta", spacing)


@dataclass(frozen=True)
class CostField:
    """Path cost per voxel: alpha1 * (1 - dist / max_dist) ** gamma on
    foreground, +inf on background. Deepest voxels cost 0.
    """

    field: ScalarVolume
    alpha1: float
    gamma: float
    dist: DistanceField


def cost_field(
    dist: DistanceField, alpha1: float = DEFAULT_ALPHA1, gamma: float = DEFAULT_GAMMA
) -> CostField:
    if alpha1 <= 0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if dist.max_dist <= 0:
        raise DegenerateShapeError("cost_field needs a field with positive maximum distance")
    d = dist.field.data
    fg = d > 0
    out = np.full(d.shape, np.inf)
    out[fg] = alpha1 * (1.0 - d[fg] / dist.max_dist) ** gamma
    return CostField(
        field=ScalarVolume(out, dist.field.spacing),
        alpha1=float(alpha1),
        gamma=float(gamma),
        dist=dist,
    )


def visitation_radius(dist: DistanceField, radius: RadiusParams) -> ScalarVolume:
    """Visitation ball radius per foreground voxel, 0 on background."""
    d = dist.field.data
    fg = d > 0
    out = np.zeros(d.shape)
    out[fg] = radius.alpha2 * d[fg] + radius.beta
    return ScalarVolume(out, dist.field.spacing)


@dataclass(frozen=True)
class SkeletonPath:
    """One accepted centerline trace.

    voxels is an (n, 3) array of (x, y, z) voxel coordinates ordered from
    the seed (start) to the voxel where the trace met the existing
    skeleton (end); for the first path of a component the end is the
    anchor. cost is the accumulated path cost, arc_length_mm the physical
    polyline length.
    """

    voxels: np.ndarray
    start: Coord
    end: Coord
    cost: float
    arc_length_mm: float


@dataclass(frozen=True)
class Skeleton:
    """Skeleton of one shape: the voxel mask, the accepted paths in trace
    order, and the visited region (union of all visitation balls).
    """

    mask: BinaryMask
    paths: tuple[SkeletonPath, ...]
    visited: BinaryMask
    components: int
    alpha1: float
    gamma: float
    radius: RadiusParams
    class_id: int = 1

    @property
    def voxel_count(self) -> int:
        return self.mask.foreground_count


_STRUCT26 = np.ones((3, 3, 3), dtype=bool)


def _targets_to_flags(shape: tuple[int, int, int], grid, targets) -> np.ndarray:
    flags = np.zeros(shape, dtype=np.uint8)
    if isinstance(targets, BinaryMask):
        flags[targets.data] = 1
    elif isinstance(targets, np.ndarray) and targets.dtype == np.bool_:
        flags[targets] = 1
    else:
        pts = np.atleast_2d(np.asarray(targets, dtype=np.int64))
        for x, y, z in pts:
            grid.index_of(int(x), int(y), int(z))  # bounds check
            flags[int(z), int(y), int(x)] = 1
    return flags


def trace_path(cost: CostField, shape: BinaryMask, start: Coord, targets) -> SkeletonPath:
    """Cheapest path from start to the nearest target voxel, restricted
    to the shape's foreground.

    targets may be a BinaryMask, a boolean array, one (x, y, z) triple or
    a sequence of them. Raises UnreachableTargetError, naming the start's
    connected component, when no target shares it.
    """
    field = cost.field
    field.require_same_grid(shape, "trace_path")
    carr = np.where(shape.data, field.data, np.inf)
    sx, sy, sz = field.spacing
    x, y, z = (int(v) for v in start)
    start_flat = field.index_of(x, y, z)
    if not np.isfinite(carr[z, y, x]):
        raise ValueError(f"start voxel {(x, y, z)} is outside the shape")
    flags = _targets_to_flags(carr.shape, field, targets)
    if not flags.any():
        raise ValueError("at least one target voxel is required")
    if not np.isfinite(carr[flags != 0]).all():
        raise ValueError("all target voxels must lie inside the shape")

    dist, pred, hit = kernels.dijkstra_grid(
        carr,
        start_flat,
        flags,
        True,
        True,
        sx,
        sy,
        sz,
        kernels.NEIGHBOR_OFFSETS,
    )
    if hit < 0:
        lbl, ncomp = ndimage.label(shape.data, structure=_STRUCT26)
        comp = int(lbl[z, y, x])
        raise UnreachableTargetError(
            f"no target is reachable from start {(x, y, z)}: start lies in connected "
            f"component {comp} of {ncomp} and no target voxel shares it"
        )
    flat = kernels.path_from_pred(pred, int(hit))
    coords = np.stack([_unflatten(f, carr.shape) for f in flat])
    return SkeletonPath(
        voxels=coords,
        start=(x, y, z),
        end=tuple(int(v) for v in coords[-1]),
        cost=float(dist[int(hit)]),
        arc_length_mm=_arc_length(coords, field.spacing),
    )


def _unflatten(flat: int, shape: tuple[int, int, int]) -> np.ndarray:
    nz, ny, nx = shape
    z = flat // (ny * nx)
    rem = flat % (ny * nx)
    return np.array([rem % nx, rem // nx, z], dtype=np.int64)


def _arc_length(coords_xyz: np.ndarray, spacing: Spacing) -> float:
    if coords_xyz.shape[0] < 2:
        return 0.0
    phys = coords_xyz.astype(np.float64) * np.asarray(spacing)
    return float(np.linalg.norm(np.diff(phys, axis=0), axis=1).sum())


def skeletonize(
    mask: BinaryMask,
    radius: RadiusParams | None = None,
    alpha1: float = DEFAULT_ALPHA1,
    gamma: float = DEFAULT_GAMMA,
    class_id: int = 1,
) -> Skeleton:
    """Skeletonize a binary shape, one skeleton tree per 26-connected
    component. The skeleton has exactly as many components as the shape.
    """
    require_foreground(mask, "skeletonize")
    if radius is None:
        radius = default_radius(mask.spacing)

    dist = distance_transform(mask)
    cost = cost_field(dist, alpha1, gamma)

    lbl, ncomp = ndimage.label(mask.data, structure=_STRUCT26)
    boxes = ndimage.find_objects(lbl)
    sx, sy, sz = mask.spacing

    skel_global = np.zeros(mask.data.shape, dtype=bool)
    visited_global = np.zeros(mask.data.shape, dtype=bool)
    paths: list[SkeletonPath] = []

    for ci in range(1, ncomp + 1):
        box = boxes[ci - 1]
        comp_max_dist = float(dist.field.data[box][lbl[box] == ci].max())
        reach = radius.alpha2 * comp_max_dist + radius.beta
        pad = [int(math.ceil(reach / s)) + 1 for s in (sz, sy, sx)]
        esl = tuple(
            slice(max(0, b.start - p), min(n, b.stop + p))
            for b, p, n in zip(box, pad, mask.data.shape)
        )
        offset_zyx = np.array([s.start for s in esl], dtype=np.int64)

        sub = lbl[esl] == ci
        dloc = np.ascontiguousarray(dist.field.data[esl])
        cloc = np.where(sub, cost.field.data[esl], np.inf)
        shape_loc = sub.shape
        nzc, nyc, nxc = shape_loc

        # anchor: deepest voxel of the component, first in scan order
        dsel = np.where(sub, dloc, -np.inf)
        anchor_flat = int(dsel.argmax())

        geo, _, _ = kernels.dijkstra_grid(
            cloc,
            anchor_flat,
            np.zeros(shape_loc, dtype=np.uint8),
            False,
            False,
            sx,
            sy,
            sz,
            kernels.NEIGHBOR_OFFSETS,
        )
        geo3 = geo.reshape(shape_loc)

        visited = np.zeros(shape_loc, dtype=bool)
        skel = np.zeros(shape_loc, dtype=bool)
        tflags = np.zeros(shape_loc, dtype=np.uint8)
        tflags.reshape(-1)[anchor_flat] = 1
        skel_phys: list[np.ndarray] = []
        first = True

        while True:
            unvis = sub & ~visited
            if not unvis.any():
                break
            csel = np.where(unvis, cloc, -np.inf)
            peak = csel.max()
            cand = csel == peak
            if cand.sum() > 1:
                gsel = np.where(cand, geo3, -np.inf)
                cand &= gsel == gsel.max()
            seed_flat = int(np.flatnonzero(cand.reshape(-1))[0])

            pdist, pred, hit = kernels.dijkstra_grid(
                cloc,
                seed_flat,
                tflags,
                True,
                True,
                sx,
                sy,
                sz,
                kernels.NEIGHBOR_OFFSETS,
            )
            if hit < 0:
                raise UnreachableTargetError(
                    "internal trace failed inside one connected component"
                )
            flat_path = kernels.path_from_pred(pred, int(hit))
            local = np.stack([_unflatten(f, shape_loc) for f in flat_path])
            phys = local.astype(np.float64) * np.array([sx, sy, sz])
            arc = _arc_length(local, (sx, sy, sz))

            keep = True
            if not first and arc < radius.beta and skel_phys:
                e = phys[0]
                ez, ey, ex = local[0, 2], local[0, 1], local[0, 0]
                reach_e = radius.alpha2 * dloc[ez, ey, ex] + radius.beta
                existing = np.concatenate(skel_phys)
                dmin = math.sqrt(
                    float(((existing - e) ** 2).sum(axis=1).min())
                )
                if dmin <= reach_e:
                    keep = False

            pz = local[:, 2].astype(np.int64)
            py = local[:, 1].astype(np.int64)
            px = local[:, 0].astype(np.int64)
            kernels.mark_spheres(
                visited, dloc, pz, py, px, radius.alpha2, radius.beta, sx, sy, sz
            )

            if keep:
                skel[pz, py, px] = True
                tflags[pz, py, px] = 1
                skel_phys.append(phys)
                gcoords = local + offset_zyx[::-1]
                paths.append(
                    SkeletonPath(
                        voxels=gcoords,
                        start=tuple(int(v) for v in gcoords[0]),
                        end=tuple(int(v) for v in gcoords[-1]),
                        cost=float(pdist[int(hit)]),
                        arc_length_mm=arc,
                    )
                )
            first = False

        skel_global[esl] |= skel
        visited_global[esl] |= visited

    return Skeleton(
        mask=BinaryMask(skel_global, mask.spacing),
        paths=tuple(paths),
        visited=BinaryMask(visited_global, mask.spacing),
        components=int(ncomp),
        alpha1=float(alpha1),
        gamma=float(gamma),
        radius=radius,
        class_id=class_id,
    )


def skeletonize_multiclass(
    volume: LabelVolume,
    radius: RadiusParams | dict[int, RadiusParams] | None = None,
    alpha1: float = DEFAULT_ALPHA1,
    gamma: float = DEFAULT_GAMMA,
    classes: Sequence[int] | None = None,
) -> dict[int, Skeleton]:
    """Skeletonize classes of a label volume independently.

    classes defaults to every label present. A requested class with no
    voxels is skipped with a warning rather than raising. radius may be
    one RadiusParams for all classes or a per-class map; None uses the
    package default for the volume spacing.
    """
    wanted = volume.labels() if classes is None else [int(c) for c in classes]
    out: dict[int, Skeleton] = {}
    for cid in wanted:
        mask, found = extract_class(volume, cid)
        if not found:
            warnings.warn(f"class {cid} has no voxels; skipped", stacklevel=2)
            continue
        if isinstance(radius, dict):
            r = radius.get(cid)
        else:
            r = radius
        out[cid] = skeletonize(mask, radius=r, alpha1=alpha1, gamma=gamma, class_id=cid)
    return out


def skeleton_label_volume(skeletons: dict[int, Skeleton]) -> LabelVolume:
    """Merge per-class skeleton masks into one label volume. Overlaps
    resolve to the lower class id.
    """
    if not skeletons:
        raise ValueError("need at least one skeleton")
    first = next(iter(skeletons.values()))
    out = np.zeros(first.mask.data.shape, dtype=np.uint16)
    for cid in sorted(skeletons):
        sk = skeletons[cid]
        put = sk.mask.data & (out == 0)
        out[put] = cid
    return LabelVolume(out, first.mask.spacing)


def weight_map(
    skeleton: Skeleton,
    shape: BinaryMask,
    mode: str = "binary",
    tau: float | None = None,
) -> ScalarVolume:
    """Per-voxel loss weights from a skeleton of a shape.

    "binary" puts weight 1 on skeleton voxels and 0 elsewhere.
    "distance_decay" puts exp(-d / tau) on shape voxels, with d the
    distance to the nearest skeleton voxel, and 0 outside the shape; tau
    defaults to twice the coarsest spacing component.
    """
    skeleton.mask.require_same_grid(shape, "weight_map")
    spacing = skeleton.mask.spacing
    if mode == "binary":
        out = skeleton.mask.data.astype(np.float64)
        return ScalarVolume(out, spacing)
    if mode != "distance_decay":
        raise ValueError(f"mode must be 'binary' or 'distance_decay', got {mode!r}")
    if tau is None:
        tau = 2.0 * max(spacing)
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    d = distance_to_sites(skeleton.mask.data, spacing)
    out = np.where(shape.data, np.exp(-d / tau), 0.0)
    return ScalarVolume(out, spacing)


def combine_weight_maps(maps: dict[int, ScalarVolume]) -> ScalarVolume:
    """Pointwise maximum of per-class weight maps."""
    if not maps:
        raise ValueError("need at least one weight map")
    vols = [maps[c] for c in sorted(maps)]
    out = vols[0].data.copy()
    for v in vols[1:]:
        vols[0].require_same_grid(v, "combine_weight_maps")
        np.maximum(out, v.data, out=out)
    return ScalarVolume(out, vols[0].spacing)
