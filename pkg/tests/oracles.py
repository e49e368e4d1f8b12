"""Independent brute-force references for the test suite.

Everything here is deliberately slow and simple: nested loops and
all-pairs arithmetic with none of the library's algorithmic structure,
so agreement is meaningful evidence.
"""

from __future__ import annotations

import numpy as np


def brute_edt(occ: np.ndarray, spacing: tuple[float, float, float]) -> np.ndarray:
    """All-pairs Euclidean distance transform.

    occ is a (nz, ny, nx) boolean array; result holds, per foreground
    voxel, the min distance in mm to any background voxel center, and 0
    on background. A volume with no background is padded with a virtual
    one-voxel background shell.
    """
    occ = np.asarray(occ, dtype=bool)
    sx, sy, sz = spacing
    if occ.all():
        padded = np.pad(occ, 1)
        inner = brute_edt(padded, spacing)
        return inner[1:-1, 1:-1, 1:-1]
    bg = np.argwhere(~occ)  # (m, 3) of (z, y, x)
    bg_mm = bg[:, ::-1] * np.array([sx, sy, sz])
    out = np.zeros(occ.shape)
    for z, y, x in np.argwhere(occ):
        p = np.array([x * sx, y * sy, z * sz])
        out[z, y, x] = np.sqrt(((bg_mm - p) ** 2).sum(axis=1).min())
    return out


def brute_count_slabs(occ: np.ndarray, np_axis: int, r: int) -> int:
    """Slab count by explicit partition scan along one numpy axis."""
    occ = np.asarray(occ, dtype=bool)
    extent = occ.shape[np_axis]
    count = 0
    for start in range(0, extent, r):
        sl = [slice(None)] * 3
        sl[np_axis] = slice(start, min(start + r, extent))
        if occ[tuple(sl)].any():
            count += 1
    return count


def lsq_slope(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Ordinary least-squares slope and r-squared via the closed-form
    sums, independent of np.polyfit.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(xs)
    sx, sy = xs.sum(), ys.sum()
    sxx, sxy = (xs * xs).sum(), (xs * ys).sum()
    denom = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    resid = ys - (slope * xs + intercept)
    ss_res = (resid**2).sum()
    ss_tot = ((ys - ys.mean()) ** 2).sum()
    r2 = 1.0 if ss_tot < 1e-12 else 1.0 - ss_res / ss_tot
    return float(slope), float(r2)


def surface_voxels(occ: np.ndarray) -> np.ndarray:
    """(n, 3) array of (z, y, x) foreground voxels with at least one
    face-adjacent background neighbor; voxels outside the grid count as
    background.
    """
    occ = np.asarray(occ, dtype=bool)
    out = []
    nz, ny, nx = occ.shape
    for z, y, x in np.argwhere(occ):
        for dz, dy, dx in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            zz, yy, xx = z + dz, y + dy, x + dx
            if not (0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx) or not occ[zz, yy, xx]:
                out.append((z, y, x))
                break
    return np.array(out).reshape(-1, 3)


def _pair_dists(a_zyx: np.ndarray, b_zyx: np.ndarray, spacing) -> np.ndarray:
    """Per row of a: min distance in mm to any row of b."""
    sx, sy, sz = spacing
    w = np.array([sz, sy, sx])
    a = a_zyx * w
    b = b_zyx * w
    out = np.empty(len(a))
    for i, p in enumerate(a):
        out[i] = np.sqrt(((b - p) ** 2).sum(axis=1).min())
    return out


def brute_surface_distances(pred: np.ndarray, ref: np.ndarray, spacing) -> np.ndarray:
    """Pooled bidirectional surface-to-surface distance set in mm."""
    sp = surface_voxels(pred)
    sr = surface_voxels(ref)
    if len(sp) == 0 or len(sr) == 0:
        raise ValueError("empty mask has no surface")
    return np.concatenate([_pair_dists(sp, sr, spacing), _pair_dists(sr, sp, spacing)])


def brute_hd95(pred: np.ndarray, ref: np.ndarray, spacing) -> float:
    pooled = brute_surface_distances(pred, ref, spacing)
    return float(np.percentile(pooled, 95))


def brute_hausdorff(pred: np.ndarray, ref: np.ndarray, spacing) -> float:
    """Exact (100th percentile) symmetric Hausdorff surface distance."""
    return float(brute_surface_distances(pred, ref, spacing).max())


def brute_dice(pred: np.ndarray, ref: np.ndarray) -> float:
    p = np.asarray(pred, dtype=bool)
    r = np.asarray(ref, dtype=bool)
    if not p.any() and not r.any():
        return 1.0
    return 2.0 * np.count_nonzero(p & r) / (np.count_nonzero(p) + np.count_nonzero(r))


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def brute_components26(occ: np.ndarray) -> int:
    """26-connected component count by union-find over voxel pairs."""
    occ = np.asarray(occ, dtype=bool)
    nz, ny, nx = occ.shape
    idx = {tuple(v): i for i, v in enumerate(map(tuple, np.argwhere(occ)))}
    uf = _UnionFind(len(idx))
    for (z, y, x), i in idx.items():
        for dz in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dz == dy == dx == 0:
                        continue
                    j = idx.get((z + dz, y + dy, x + dx))
                    if j is not None:
                        uf.union(i, j)
    return len({uf.find(i) for i in idx.values()})


def random_mask(rng: np.random.Generator, max_side: int = 24, p: float | None = None) -> np.ndarray:
    """Random boolean volume with at least one foreground voxel."""
    shape = tuple(int(rng.integers(3, max_side + 1)) for _ in range(3))
    if p is None:
        p = float(rng.uniform(0.05, 0.8))
    occ = rng.random(shape) < p
    if not occ.any():
        occ[tuple(int(rng.integers(0, s)) for s in shape)] = True
    return occ


def random_spacing(rng: np.random.Generator) -> tuple[float, float, float]:
    return tuple(float(rng.uniform(0.4, 2.5)) for _ in range(3))
