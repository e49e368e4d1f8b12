"""Deterministic tubular phantoms with analytic centerlines.

Every phantom is rasterized from closed-form geometry: a voxel is
foreground exactly when its centre satisfies the shape predicate, so the
same spec always yields the same volume. Shape centres snap to voxel
centres to keep discretized volumes close to their analytic values.

Centerlines are reported per class as lists of ordered polylines in
physical millimetres, together with bifurcation points and terminal
(leaf) endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateShapeError
from .voxgrid import BinaryMask, Coord, LabelVolume, Spacing

KINDS = ("cylinder", "ball", "torus", "helix", "y_branch", "multiclass_tree")

# background margin every shape must keep to the volume boundary, voxels
MARGIN_VOX = 2


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters of one phantom.

    Fields not used by a kind are ignored: cylinder uses radius_mm and
    length_mm; ball uses radius_mm; torus uses major_radius_mm and
    radius_mm; helix adds turns and pitch_mm; y_branch uses radius_mm,
    length_mm and angle_deg; multiclass_tree adds generations.
    """

    kind: str
    dims: Coord
    spacing: Spacing = (1.0, 1.0, 1.0)
    radius_mm: float = 3.0
    length_mm: float = 40.0
    major_radius_mm: float = 12.0
    turns: float = 2.0
    pitch_mm: float = 16.0
    angle_deg: float = 30.0
    generations: int = 3

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        if len(self.dims) != 3 or any(int(d) < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")
        if self.radius_mm <= 0:
            raise ValueError("radius_mm must be positive")
        if self.kind == "multiclass_tree" and self.generations < 1:
            raise ValueError("generations must be at least 1")


@dataclass(frozen=True)
class Phantom:
    """A rasterized phantom plus its analytic ground truth."""

    volume: LabelVolume
    centerlines: dict[int, list[np.ndarray]]
    bifurcations: dict[int, list[tuple[float, float, float]]]
    terminals: dict[int, list[tuple[float, float, float]]]
    spec: PhantomSpec

    def centerline_points(self, class_id: int = 1) -> np.ndarray:
        """All centerline sample points of one class, concatenated (n, 3) mm."""
        lines = self.centerlines.get(class_id, [])
        if not lines:
            return np.empty((0, 3))
        return np.concatenate(lines, axis=0)

    def mask(self, class_id: int | None = None) -> BinaryMask:
        """Foreground mask of one class, or of all classes when None."""
        if class_id is None:
            return BinaryMask(self.volume.data > 0, self.volume.spacing)
        return BinaryMask(self.volume.data == class_id, self.volume.spacing)


def _snap_center(spec: PhantomSpec) -> np.ndarray:
    """Volume centre snapped to the nearest voxel centre, in mm."""
    out = []
    for n, s in zip(spec.dims, spec.spacing):
        out.append(round((n - 1) / 2) * s)
    return np.array(out)


def _check_margin(spec: PhantomSpec, lo_mm: np.ndarray, hi_mm: np.ndarray) -> None:
    """Require the shape's bounding box to keep MARGIN_VOX background
    voxels on every face.
    """
    for axis, (n, s, lo, hi) in enumerate(
        zip(spec.dims, spec.spacing, lo_mm, hi_mm)
    ):
        lo_vox = lo / s
        hi_vox = hi / s
        if lo_vox < MARGIN_VOX or hi_vox > (n - 1) - MARGIN_VOX:
            name = "xyz"[axis]
            raise DegenerateShapeError(
                f"{spec.kind} spans [{lo:.1f}, {hi:.1f}] mm on axis {name}, closer than "
                f"{MARGIN_VOX} voxels to the boundary of {n} voxels at {s} mm; "
                "enlarge dims or shrink the shape"
            )


def _axis_coords(spec: PhantomSpec):
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing
    return np.arange(nx) * sx, np.arange(ny) * sy, np.arange(nz) * sz


def _paint_capsule(
    label: np.ndarray,
    spec: PhantomSpec,
    p0: np.ndarray,
    p1: np.ndarray,
    radius: float,
    class_id: int,
) -> None:
    """Set class_id on empty voxels within radius of segment p0-p1."""
    sx, sy, sz = spec.spacing
    spacing = np.array([sx, sy, sz])
    lo = np.minimum(p0, p1) - radius
    hi = np.maximum(p0, p1) + radius
    lo_idx = np.maximum(0, np.floor(lo / spacing).astype(int))
    hi_idx = np.minimum(np.array(spec.dims) - 1, np.ceil(hi / spacing).astype(int))
    if np.any(lo_idx > hi_idx):
        return
    x0, y0, z0 = lo_idx
    x1, y1, z1 = hi_idx

    xs = (np.arange(x0, x1 + 1) * sx)[None, None, :]
    ys = (np.arange(y0, y1 + 1) * sy)[None, :, None]
    zs = (np.arange(z0, z1 + 1) * sz)[:, None, None]
    d = p1 - p0
    len_sq = float(d @ d)
    if len_sq == 0.0:
        qx, qy, qz = p0
        dist_sq = (xs - qx) ** 2 + (ys - qy) ** 2 + (zs - qz) ** 2
    else:
        t = ((xs - p0[0]) * d[0] + (ys - p0[1]) * d[1] + (zs - p0[2]) * d[2]) / len_sq
        t = np.clip(t, 0.0, 1.0)
        dist_sq = (
            (xs - (p0[0] + t * d[0])) ** 2
            + (ys - (p0[1] + t * d[1])) ** 2
            + (zs - (p0[2] + t * d[2])) ** 2
        )
    inside = dist_sq <= radius * radius
    region = label[z0 : z1 + 1, y0 : y1 + 1, x0 : x1 + 1]
    region[inside & (region == 0)] = class_id


def _polyline(p0: np.ndarray, p1: np.ndarray, step: float) -> np.ndarray:
    """Sample a segment end to end at most step apart, both ends included."""
    length = float(np.linalg.norm(p1 - p0))
    n = max(2, int(math.ceil(length / step)) + 1)
    t = np.linspace(0.0, 1.0, n)
    return p0[None, :] + t[:, None] * (p1 - p0)[None, :]


def generate(spec: PhantomSpec) -> Phantom:
    """Rasterize a phantom. Raises DegenerateShapeError when the shape
    would come closer than two voxels to the volume boundary.
    """
    builder = {
        "cylinder": _gen_cylinder,
        "ball": _gen_ball,
        "torus": _gen_torus,
        "helix": _gen_helix,
        "y_branch": _gen_y_branch,
        "multiclass_tree": _gen_tree,
    }[spec.kind]
    return builder(spec)


def _finish(
    spec: PhantomSpec,
    label: np.ndarray,
    centerlines: dict[int, list[np.ndarray]],
    bifurcations: dict[int, list[tuple[float, float, float]]],
    terminals: dict[int, list[tuple[float, float, float]]],
) -> Phantom:
    return Phantom(
        volume=LabelVolume(label, spec.spacing),
        centerlines=centerlines,
        bifurcations=bifurcations,
        terminals=terminals,
        spec=spec,
    )


def _sample_step(spec: PhantomSpec) -> float:
    return 0.5 * min(spec.spacing)


def _gen_cylinder(spec: PhantomSpec) -> Phantom:
    c = _snap_center(spec)
    r = spec.radius_mm
    half = spec.length_mm / 2.0
    lo = np.array([c[0] - r, c[1] - r, c[2] - half])
    hi = np.array([c[0] + r, c[1] + r, c[2] + half])
    _check_margin(spec, lo, hi)

    xs, ys, zs = _axis_coords(spec)
    radial = (xs[None, None, :] - c[0]) ** 2 + (ys[None, :, None] - c[1]) ** 2 <= r * r
    axial = (zs >= c[2] - half) & (zs <= c[2] + half)
    label = (radial & axial[:, None, None]).astype(np.uint8)

    p0 = np.array([c[0], c[1], c[2] - half])
    p1 = np.array([c[0], c[1], c[2] + half])
    line = _polyline(p0, p1, _sample_step(spec))
    return _finish(
        spec,
        label,
        {1: [line]},
        {1: []},
        {1: [tuple(p0), tuple(p1)]},
    )


def _gen_ball(spec: PhantomSpec) -> Phantom:
    c = _snap_center(spec)
    r = spec.radius_mm
    _check_margin(spec, c - r, c + r)
    xs, ys, zs = _axis_coords(spec)
    dist_sq = (
        (xs[None, None, :] - c[0]) ** 2
        + (ys[None, :, None] - c[1]) ** 2
        + (zs[:, None, None] - c[2]) ** 2
    )
    label = (dist_sq <= r * r).astype(np.uint8)
    return _finish(spec, label, {1: [c[None, :]]}, {1: []}, {1: []})


def _gen_torus(spec: PhantomSpec) -> Phantom:
    c = _snap_center(spec)
    rr = spec.major_radius_mm
    rt = spec.radius_mm
    if rt >= rr:
        raise DegenerateShapeError(
            f"torus tube radius {rt} must be smaller than major radius {rr}"
        )
    lo = np.array([c[0] - rr - rt, c[1] - rr - rt, c[2] - rt])
    hi = np.array([c[0] + rr + rt, c[1] + rr + rt, c[2] + rt])
    _check_margin(spec, lo, hi)

    xs, ys, zs = _axis_coords(spec)
    ring = np.sqrt(
        (xs[None, None, :] - c[0]) ** 2 + (ys[None, :, None] - c[1]) ** 2
    )
    dist_sq = (ring - rr) ** 2 + (zs[:, None, None] - c[2]) ** 2
    label = (dist_sq <= rt * rt).astype(np.uint8)

    # closed ring, first sample repeated at the end
    n = max(16, int(math.ceil(2 * math.pi * rr / _sample_step(spec))) + 1)
    theta = np.linspace(0.0, 2 * math.pi, n)
    line = np.stack(
        [c[0] + rr * np.cos(theta), c[1] + rr * np.sin(theta), np.full(n, c[2])],
        axis=1,
    )
    return _finish(spec, label, {1: [line]}, {1: []}, {1: []})


def _gen_helix(spec: PhantomSpec) -> Phantom:
    c = _snap_center(spec)
    rr = spec.major_radius_mm
    rt = spec.radius_mm
    height = spec.turns * spec.pitch_mm
    z_lo = c[2] - height / 2.0
    lo = np.array([c[0] - rr - rt, c[1] - rr - rt, z_lo - rt])
    hi = np.array([c[0] + rr + rt, c[1] + rr + rt, z_lo + height + rt])
    _check_margin(spec, lo, hi)

    t_end = 2 * math.pi * spec.turns
    chord = _sample_step(spec) / math.hypot(rr, spec.pitch_mm / (2 * math.pi))
    n = max(16, int(math.ceil(t_end / chord)) + 1)
    t = np.linspace(0.0, t_end, n)
    pts = np.stack(
        [
            c[0] + rr * np.cos(t),
            c[1] + rr * np.sin(t),
            z_lo + spec.pitch_mm * t / (2 * math.pi),
        ],
        axis=1,
    )
    label = np.zeros(spec.dims[::-1], dtype=np.uint8)
    for i in range(n - 1):
        _paint_capsule(label, spec, pts[i], pts[i + 1], rt, 1)
    return _finish(
        spec,
        label,
        {1: [pts]},
        {1: []},
        {1: [tuple(pts[0]), tuple(pts[-1])]},
    )


def _gen_y_branch(spec: PhantomSpec) -> Phantom:
    c = _snap_center(spec)
    r = spec.radius_mm
    trunk_len = spec.length_mm * 0.5
    branch_len = spec.length_mm * 0.5
    theta = math.radians(spec.angle_deg)

    base = np.array([c[0], c[1], c[2] - spec.length_mm / 2.0])
    junction = base + np.array([0.0, 0.0, trunk_len])
    d_a = np.array([0.0, math.sin(theta), math.cos(theta)])
    d_b = np.array([0.0, -math.sin(theta), math.cos(theta)])
    tip_a = junction + branch_len * d_a
    tip_b = junction + branch_len * d_b

    pts = np.stack([base, junction, tip_a, tip_b])
    _check_margin(spec, pts.min(axis=0) - r, pts.max(axis=0) + r)

    label = np.zeros(spec.dims[::-1], dtype=np.uint8)
    _paint_capsule(label, spec, base, junction, r, 1)
    _paint_capsule(label, spec, junction, tip_a, r, 1)
    _paint_capsule(label, spec, junction, tip_b, r, 1)

    step = _sample_step(spec)
    through = np.concatenate(
        [_polyline(base, junction, step), _polyline(junction, tip_a, step)[1:]]
    )
    side = _polyline(junction, tip_b, step)
    return _finish(
        spec,
        label,
        {1: [through, side]},
        {1: [tuple(junction)]},
        {1: [tuple(tip_a), tuple(tip_b)]},
    )


def _rodrigues(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    k = axis / np.linalg.norm(axis)
    return (
        v * math.cos(angle)
        + np.cross(k, v) * math.sin(angle)
        + k * (k @ v) * (1 - math.cos(angle))
    )


def _gen_tree(spec: PhantomSpec) -> Phantom:
    c = _snap_center(spec)
    theta = math.radians(spec.angle_deg)
    length_decay = 0.72
    radius_decay = 0.78

    # breadth-first: (origin, direction, length, radius, generation)
    base = np.array([c[0], c[1], c[2] - spec.length_mm * 0.75])
    queue = [(base, np.array([0.0, 0.0, 1.0]), spec.length_mm, spec.radius_mm, 1)]
    segments = []  # (class_id, p0, p1, radius, generation)
    next_id = 1
    while queue:
        origin, direction, length, radius, gen = queue.pop(0)
        cid = next_id
        next_id += 1
        tip = origin + direction * length
        segments.append((cid, origin, tip, radius, gen))
        if gen < spec.generations:
            pivot = np.array([1.0, 0.0, 0.0]) if gen % 2 == 1 else np.array([0.0, 1.0, 0.0])
            for sign in (1.0, -1.0):
                child_dir = _rodrigues(direction, pivot, sign * theta)
                queue.append(
                    (tip, child_dir, length * length_decay, radius * radius_decay, gen + 1)
                )

    pts = np.concatenate([[p0, p1] for _, p0, p1, _, _ in segments])
    radii = max(r for _, _, _, r, _ in segments)
    _check_margin(spec, pts.min(axis=0) - radii, pts.max(axis=0) + radii)

    label = np.zeros(spec.dims[::-1], dtype=np.uint8)
    step = _sample_step(spec)
    centerlines: dict[int, list[np.ndarray]] = {}
    bifurcations: dict[int, list[tuple[float, float, float]]] = {}
    terminals: dict[int, list[tuple[float, float, float]]] = {}
    for cid, p0, p1, radius, gen in segments:
        _paint_capsule(label, spec, p0, p1, radius, cid)
        centerlines[cid] = [_polyline(p0, p1, step)]
        if gen < spec.generations:
            bifurcations[cid] = [tuple(p1)]
            terminals[cid] = []
        else:
            bifurcations[cid] = []
            terminals[cid] = [tuple(p1)]
    return _finish(spec, label, centerlines, bifurcations, terminals)


def perturb(phantom: Phantom, p: float, seed: int) -> Phantom:
    """Flip surface foreground voxels to background with probability p.

    Surface voxels are foreground voxels with at least one face-adjacent
    background neighbour (the outside of the grid counts as background).
    Centerlines and other analytic records are kept unchanged. The same
    seed always flips the same voxels.
    """
    if not (0.0 <= p <= 0.3):
        raise ValueError(f"perturbation probability must lie in [0, 0.3], got {p}")
    data = phantom.volume.data
    fg = data > 0
    padded = np.pad(fg, 1, constant_values=False)
    interior = (
        padded[2:, 1:-1, 1:-1]
        & padded[:-2, 1:-1, 1:-1]
        & padded[1:-1, 2:, 1:-1]
        & padded[1:-1, :-2, 1:-1]
        & padded[1:-1, 1:-1, 2:]
        & padded[1:-1, 1:-1, :-2]
    )
    surface = fg & ~interior

    rng = np.random.default_rng(seed)
    flips = surface & (rng.random(data.shape) < p)
    out = data.copy()
    out[flips] = 0
    return replace(phantom, volume=LabelVolume(out, phantom.volume.spacing))
