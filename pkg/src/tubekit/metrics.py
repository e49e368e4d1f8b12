"""Segmentation quality metrics for tubular structures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .edt import distance_to_sites
from .errors import UndefinedMetricError
from .mpcskel import Skeleton, skeletonize
from .voxgrid import BinaryMask, LabelVolume

Skeletonizer = Callable[[BinaryMask], BinaryMask]

_STRUCT26 = np.ones((3, 3, 3), dtype=bool)


def dice(pred: BinaryMask, ref: BinaryMask) -> float:
    """Volumetric Dice overlap. Two empty masks score 1.0."""
    pred.require_same_grid(ref, "dice")
    p = pred.data
    r = ref.data
    denom = int(p.sum()) + int(r.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p & r).sum()) / denom


def _default_skeletonizer(mask: BinaryMask) -> BinaryMask:
    return skeletonize(mask).mask


def cl_dice(
    pred: BinaryMask,
    ref: BinaryMask,
    skeletonizer: Skeletonizer | None = None,
    pred_skeleton: BinaryMask | None = None,
    ref_skeleton: BinaryMask | None = None,
) -> float:
    """Centerline Dice: harmonic mean of topology precision (how much of
    the predicted skeleton lies inside the reference) and topology
    sensitivity (how much of the reference skeleton lies inside the
    prediction). Two empty masks score 1.0, exactly one empty scores 0.0.

    Skeletons come from the minimum path-cost backend by default; pass a
    different skeletonizer, or externally computed skeleton masks, to
    reproduce other thinning conventions.
    """
    pred.require_same_grid(ref, "cl_dice")
    p_empty = not pred.data.any()
    r_empty = not ref.data.any()
    if p_empty and r_empty:
        return 1.0
    if p_empty or r_empty:
        return 0.0
    skel = skeletonizer or _default_skeletonizer
    sp = (pred_skeleton.data if pred_skeleton is not None else skel(pred).data)
    sr = (ref_skeleton.data if ref_skeleton is not None else skel(ref).data)
    if not sp.any() or not sr.any():
        return 0.0
    tprec = int((sp & ref.data).sum()) / int(sp.sum())
    tsens = int((sr & pred.data).sum()) / int(sr.sum())
    if tprec + tsens == 0.0:
        return 0.0
    return 2.0 * tprec * tsens / (tprec + tsens)


def _surface(data: np.ndarray) -> np.ndarray:
    """Foreground voxels with a face-adjacent background neighbour; the
    outside of the grid counts as background.
    """
    padded = np.pad(data, 1, constant_values=False)
    interior = (
        padded[2:, 1:-1, 1:-1]
        & padded[:-2, 1:-1, 1:-1]
        & padded[1:-1, 2:, 1:-1]
        & padded[1:-1, :-2, 1:-1]
        & padded[1:-1, 1:-1, 2:]
        & padded[1:-1, 1:-1, :-2]
    )
    return data & ~interior


def hd95(pred: BinaryMask, ref: BinaryMask) -> float:
    """95th percentile of the pooled symmetric surface distances in mm.

    Surface voxels are face-boundary voxels; distances are voxel-centre
    to voxel-centre; the percentile interpolates linearly. Undefined
    (raises UndefinedMetricError) when either mask is empty.
    """
    pred.require_same_grid(ref, "hd95")
    if not pred.data.any() or not ref.data.any():
        raise UndefinedMetricError("hd95 is undefined when either mask is empty")
    sp = _surface(pred.data)
    sr = _surface(ref.data)
    d_to_ref = distance_to_sites(sr, pred.spacing)
    d_to_pred = distance_to_sites(sp, ref.spacing)
    pooled = np.concatenate([d_to_ref[sp], d_to_pred[sr]])
    return float(np.percentile(pooled, 95))


def connected_components(mask: BinaryMask) -> int:
    """Number of 26-connected foreground components."""
    _, n = ndimage.label(mask.data, structure=_STRUCT26)
    return int(n)


def betti0_error(pred: BinaryMask, ref: BinaryMask) -> int:
    """Absolute difference in 26-connected component counts."""
    pred.require_same_grid(ref, "betti0_error")
    return abs(connected_components(pred) - connected_components(ref))


@dataclass(frozen=True)
class ClassMetrics:
    class_id: int
    dice: float
    cl_dice: float
    hd95: float | None
    betti0_error: int
    in_pred: bool
    in_ref: bool

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "dice": self.dice,
            "cl_dice": self.cl_dice,
            "hd95": self.hd95,
            "betti0_error": self.betti0_error,
            "in_pred": self.in_pred,
            "in_ref": self.in_ref,
        }


@dataclass(frozen=True)
class MetricsReport:
    """Per-class metrics plus aggregate means.

    Aggregates average over classes present in the reference; spurious
    prediction-only classes are reported per class but kept out of the
    means. betti0_error is computed per class, then averaged. hd95 of
    classes empty on either side is undefined and skipped by the mean.
    """

    AGGREGATION = "mean over reference classes; betti0_error per class then averaged"

    per_class: dict[int, ClassMetrics]

    @property
    def aggregate(self) -> dict[str, float]:
        rows = [r for r in self.per_class.values() if r.in_ref]
        if not rows:
            return {}
        out = {
            "dice": float(np.mean([r.dice for r in rows])),
            "cl_dice": float(np.mean([r.cl_dice for r in rows])),
            "betti0_error": float(np.mean([r.betti0_error for r in rows])),
        }
        hd = [r.hd95 for r in rows if r.hd95 is not None]
        out["hd95"] = float(np.mean(hd)) if hd else None
        return out

    def to_dict(self) -> dict:
        return {
            "aggregation": self.AGGREGATION,
            "per_class": {str(c): m.to_dict() for c, m in sorted(self.per_class.items())},
            "aggregate": self.aggregate,
        }

    def to_csv(self) -> str:
        header = "class_id,dice,cl_dice,hd95,betti0_error,in_pred,in_ref"
        lines = [header]
        for cid in sorted(self.per_class):
            m = self.per_class[cid]
            hd = "" if m.hd95 is None else f"{m.hd95:.6g}"
            lines.append(
                f"{cid},{m.dice:.6g},{m.cl_dice:.6g},{hd},"
                f"{m.betti0_error},{int(m.in_pred)},{int(m.in_ref)}"
            )
        return "\n".join(lines) + "\n"


def evaluate(
    pred: LabelVolume,
    ref: LabelVolume,
    skeletonizer: Skeletonizer | None = None,
) -> MetricsReport:
    """Per-class Dice, centerline Dice, hd95 and component-count error.

    Classes are the union of ids present in either volume, so spurious
    predicted classes and missed reference classes both show up, flagged
    by in_pred / in_ref.
    """
    pred.require_same_grid(ref, "evaluate")
    ids = sorted(set(pred.labels()) | set(ref.labels()))
    per_class: dict[int, ClassMetrics] = {}
    for cid in ids:
        pm = BinaryMask(pred.data == cid, pred.spacing)
        rm = BinaryMask(ref.data == cid, ref.spacing)
        in_pred = pm.data.any()
        in_ref = rm.data.any()
        try:
            hd = hd95(pm, rm)
        except UndefinedMetricError:
            hd = None
        per_class[cid] = ClassMetrics(
            class_id=cid,
            dice=dice(pm, rm),
            cl_dice=cl_dice(pm, rm, skeletonizer),
            hd95=hd,
            betti0_error=betti0_error(pm, rm),
            in_pred=bool(in_pred),
            in_ref=bool(in_ref),
        )
    return MetricsReport(per_class=per_class)


@dataclass(frozen=True)
class CenterlineFidelity:
    """How tightly a skeleton follows an analytic centerline.

    mean_dist_mm / max_dist_mm are over skeleton voxels, measured to the
    nearest point of the polyline segments. coverage is the fraction of
    centerline samples with a skeleton voxel within coverage_radius_mm.
    """

    mean_dist_mm: float
    max_dist_mm: float
    coverage: float
    coverage_radius_mm: float


def _dist_to_polylines(points: np.ndarray, polylines: list[np.ndarray]) -> np.ndarray:
    """Min distance from each point to any segment of the polylines."""
    best = np.full(points.shape[0], np.inf)
    for line in polylines:
        line = np.asarray(line, dtype=np.float64)
        if line.ndim != 2 or line.shape[1] != 3 or line.shape[0] == 0:
            raise ValueError("each polyline must be a non-empty (n, 3) array")
        if line.shape[0] == 1:
            d = np.linalg.norm(points - line[0], axis=1)
            np.minimum(best, d, out=best)
            continue
        p0 = line[:-1]
        seg = line[1:] - p0
        len_sq = (seg * seg).sum(axis=1)
        safe = np.where(len_sq > 0, len_sq, 1.0)
        for lo in range(0, points.shape[0], 256):
            blk = points[lo : lo + 256]
            w = blk[:, None, :] - p0[None, :, :]
            t = np.clip((w * seg[None, :, :]).sum(axis=2) / safe[None, :], 0.0, 1.0)
            q = p0[None, :, :] + t[:, :, None] * seg[None, :, :]
            d = np.linalg.norm(blk[:, None, :] - q, axis=2).min(axis=1)
            np.minimum(best[lo : lo + 256], d, out=best[lo : lo + 256])
    return best


def centerline_fidelity(
    skeleton: Skeleton | BinaryMask,
    centerline: np.ndarray | Sequence[np.ndarray],
    coverage_radius_mm: float | None = None,
) -> CenterlineFidelity:
    """Compare a skeleton against an analytic centerline.

    centerline is one (n, 3) polyline in mm or a sequence of them.
    coverage_radius_mm defaults to twice the voxel diagonal.
    """
    mask = skeleton.mask if isinstance(skeleton, Skeleton) else skeleton
    if not mask.data.any():
        raise UndefinedMetricError("centerline_fidelity needs a non-empty skeleton")
    if isinstance(centerline, np.ndarray):
        polylines = [centerline]
    else:
        polylines = [np.asarray(c) for c in centerline]
    if not polylines or all(len(p) == 0 for p in polylines):
        raise ValueError("centerline must contain at least one point")

    spacing = np.asarray(mask.spacing)
    if coverage_radius_mm is None:
        coverage_radius_mm = 2.0 * float(np.linalg.norm(spacing))

    vox = mask.foreground_coords().astype(np.float64) * spacing
    d = _dist_to_polylines(vox, polylines)

    samples = np.concatenate([np.asarray(p, dtype=np.float64) for p in polylines])
    tree = cKDTree(vox)
    nearest, _ = tree.query(samples, k=1)
    coverage = float((nearest <= coverage_radius_mm).mean())

    return CenterlineFidelity(
        mean_dist_mm=float(d.mean()),
        max_dist_mm=float(d.max()),
        coverage=coverage,
        coverage_radius_mm=float(coverage_radius_mm),
    )
