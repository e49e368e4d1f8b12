"""Hot voxel-grid kernels.

Everything here is written in nopython style and compiled with numba by
default. Setting the environment variable ``TUBEKIT_DISABLE_NUMBA=1``
(checked once at import) skips compilation and runs the same function
bodies as plain Python, which is slow but bit-identical; the benchmark
suite and the lane-parity tests rely on that. When numba is enabled the
uncompiled bodies stay reachable through ``fn.py_func``.

Grid convention: arrays are (nz, ny, nx) C order, flat indices are
``x + nx * (y + ny * z)``, spacing is physical millimetres per voxel.
"""

from __future__ import annotations

import math
import os

import numpy as np

DISABLE_ENV = "TUBEKIT_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        """No-op stand-in so decorated functions run as plain Python."""
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def py_func_of(fn):
    """The uncompiled body of a kernel, regardless of the active lane."""
    return getattr(fn, "py_func", fn)


# 26-neighbourhood offsets in (dz, dy, dx) order; fixed scan order keeps
# every traversal deterministic.
NEIGHBOR_OFFSETS = np.array(
    [
        (dz, dy, dx)
        for dz in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
        if (dz, dy, dx) != (0, 0, 0)
    ],
    dtype=np.int64,
)


@njit(cache=True, nogil=True)
def _edt_1d(f, out, step):
    """Lower-envelope distance pass over one line.

    f holds squared distances so far (inf marks columns with no source);
    out receives the squared distance after adding this axis. step is the
    physical sample pitch.
    """
    n = f.shape[0]
    v = np.empty(n, np.int64)
    z = np.empty(n + 1, np.float64)
    k = -1
    s = 0.0
    for q in range(n):
        fq = f[q]
        if fq == np.inf:
            continue
        qs = q * step
        while k >= 0:
            ps = v[k] * step
            s = (fq + qs * qs - (f[v[k]] + ps * ps)) / (2.0 * (qs - ps))
            if s <= z[k]:
                k -= 1
            else:
                break
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
        else:
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
    if k < 0:
        for q in range(n):
            out[q] = np.inf
        return
    j = 0
    for q in range(n):
        qs = q * step
        while z[j + 1] < qs:
            j += 1
        d = qs - v[j] * step
        out[q] = f[v[j]] + d * d


@njit(cache=True, nogil=True)
def edt_sq(occ, sx, sy, sz):
    """Squared physical distance from each voxel to the nearest background
    voxel centre. Background voxels get 0; if occ has no background at all
    every entry is inf (callers pad with a shell first).
    """
    nz, ny, nx = occ.shape
    d = np.empty((nz, ny, nx), np.float64)
    m = nx
    if ny > m:
        m = ny
    if nz > m:
        m = nz
    f = np.empty(m, np.float64)

    for zi in range(nz):
        for yi in range(ny):
            for xi in range(nx):
                f[xi] = np.inf if occ[zi, yi, xi] else 0.0
            _edt_1d(f[:nx], d[zi, yi, :], sx)
    for zi in range(nz):
        for xi in range(nx):
            for yi in range(ny):
                f[yi] = d[zi, yi, xi]
            _edt_1d(f[:ny], d[zi, :, xi], sy)
    for yi in range(ny):
        for xi in range(nx):
            for zi in range(nz):
                f[zi] = d[zi, yi, xi]
            _edt_1d(f[:nz], d[:, yi, xi], sz)
    return d


@njit(cache=True, nogil=True)
def dijkstra_grid(cost, start, target, stop_at_target, use_cost, sx, sy, sz, offsets):
    """Shortest paths over the 26-connected voxel graph.

    cost: (nz, ny, nx) float64, inf marks impassable voxels. Edges are
    weighted by physical step length, multiplied by the cost at the edge
    target when use_cost is true. start is a flat index. target flags
    voxels (flat uint8) at which the search may halt when stop_at_target
    is true. Ties pop by smaller flat index so results are deterministic.

    Returns (dist, pred, hit): flat float64 distances (inf where
    unreached), flat int64 predecessors (-1 at roots), and the flat index
    of the first settled target (-1 when none was hit).
    """
    nz, ny, nx = cost.shape
    n = nz * ny * nx
    cflat = cost.reshape(n)
    tflat = target.reshape(n)

    steps = np.empty(offsets.shape[0], np.float64)
    for o in range(offsets.shape[0]):
        dz = offsets[o, 0] * sz
        dy = offsets[o, 1] * sy
        dx = offsets[o, 2] * sx
        steps[o] = math.sqrt(dx * dx + dy * dy + dz * dz)

    dist = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    settled = np.zeros(n, np.uint8)

    cap = 1024
    hk = np.empty(cap, np.float64)
    hi = np.empty(cap, np.int64)
    hs = 0

    dist[start] = 0.0
    hk[0] = 0.0
    hi[0] = start
    hs = 1
    hit = np.int64(-1)

    while hs > 0:
        key = hk[0]
        v = hi[0]
        hs -= 1
        hk[0] = hk[hs]
        hi[0] = hi[hs]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            m = i
            if l < hs and (hk[l] < hk[m] or (hk[l] == hk[m] and hi[l] < hi[m])):
                m = l
            if r < hs and (hk[r] < hk[m] or (hk[r] == hk[m] and hi[r] < hi[m])):
                m = r
            if m == i:
                break
            tk = hk[i]
            hk[i] = hk[m]
            hk[m] = tk
            ti = hi[i]
            hi[i] = hi[m]
            hi[m] = ti
            i = m

        if settled[v]:
            continue
        settled[v] = 1
        if stop_at_target and tflat[v] != 0:
            hit = v
            break

        z = v // (ny * nx)
        rem = v % (ny * nx)
        y = rem // nx
        x = rem % nx
        for o in range(offsets.shape[0]):
            z2 = z + offsets[o, 0]
            y2 = y + offsets[o, 1]
            x2 = x + offsets[o, 2]
            if z2 < 0 or z2 >= nz or y2 < 0 or y2 >= ny or x2 < 0 or x2 >= nx:
                continue
            w = x2 + nx * (y2 + ny * z2)
            cw = cflat[w]
            if cw == np.inf or settled[w] != 0:
                continue
            edge = steps[o] * cw if use_cost else steps[o]
            nd = key + edge
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = v
                if hs >= hk.shape[0]:
                    nk = np.empty(hk.shape[0] * 2, np.float64)
                    ni = np.empty(hi.shape[0] * 2, np.int64)
                    for t in range(hs):
                        nk[t] = hk[t]
                        ni[t] = hi[t]
                    hk = nk
                    hi = ni
                hk[hs] = nd
                hi[hs] = w
                hs += 1
                i = hs - 1
                while i > 0:
                    p = (i - 1) // 2
                    if hk[p] > hk[i] or (hk[p] == hk[i] and hi[p] > hi[i]):
                        tk = hk[i]
                        hk[i] = hk[p]
                        hk[p] = tk
                        ti = hi[i]
                        hi[i] = hi[p]
                        hi[p] = ti
                        i = p
                    else:
                        break
    return dist, pred, hit


@njit(cache=True, nogil=True)
def mark_spheres(visited, dist_mm, pz, py, px, alpha2, beta, sx, sy, sz):
    """Mark a ball of physical radius alpha2 * dist + beta around each
    listed voxel. visited is modified in place.
    """
    nz, ny, nx = visited.shape
    for i in range(pz.shape[0]):
        z = pz[i]
        y = py[i]
        x = px[i]
        radius = alpha2 * dist_mm[z, y, x] + beta
        r2 = radius * radius
        qz = int(radius / sz)
        qy = int(radius / sy)
        qx = int(radius / sx)
        z_lo = z - qz if z - qz > 0 else 0
        z_hi = z + qz + 1 if z + qz + 1 < nz else nz
        y_lo = y - qy if y - qy > 0 else 0
        y_hi = y + qy + 1 if y + qy + 1 < ny else ny
        x_lo = x - qx if x - qx > 0 else 0
        x_hi = x + qx + 1 if x + qx + 1 < nx else nx
        for z2 in range(z_lo, z_hi):
            ddz = (z2 - z) * sz
            zz = ddz * ddz
            if zz > r2:
                continue
            for y2 in range(y_lo, y_hi):
                ddy = (y2 - y) * sy
                yy = zz + ddy * ddy
                if yy > r2:
                    continue
                for x2 in range(x_lo, x_hi):
                    ddx = (x2 - x) * sx
                    if yy + ddx * ddx <= r2:
                        visited[z2, y2, x2] = True


def path_from_pred(pred: np.ndarray, hit: int) -> np.ndarray:
    """Walk predecessors from hit back to the root; returns flat indices
    ordered root first.
    """
    chain = []
    v = int(hit)
    while v != -1:
        chain.append(v)
        v = int(pred[v])
    chain.reverse()
    return np.asarray(chain, dtype=np.int64)
