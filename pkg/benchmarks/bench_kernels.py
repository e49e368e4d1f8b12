"""Timing comparison of the two kernel lanes.

Every hot kernel is numba-compiled by default, and setting
``TUBEKIT_DISABLE_NUMBA=1`` before import swaps the whole module onto the
same function bodies run as plain Python. This script times the compiled
lane in-process, re-executes itself in a subprocess with the flag set to
time the fallback lane, verifies both lanes produce bit-identical output,
and prints a combined table.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --full --repeats 5
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

import numpy as np

from tubekit import kernels
from tubekit.kernels import NEIGHBOR_OFFSETS
from tubekit.phantoms import PhantomSpec, generate


def cylinder_mask(dims: tuple[int, int, int], radius: float, length: float) -> np.ndarray:
    spec = PhantomSpec(kind="cylinder", dims=dims, radius_mm=radius, length_mm=length)
    return generate(spec).volume.data > 0


class Workload:
    """One kernel invocation, rebuilt identically in either lane."""

    def __init__(self, label: str, fn):
        self.label = label
        self.fn = fn

    def run(self):
        return self.fn()


def edt_workload(dims: tuple[int, int, int]) -> Workload:
    occ = cylinder_mask(dims, radius=3.0, length=dims[2] * 0.8)
    label = f"edt_sq        cylinder {dims[0]}x{dims[1]}x{dims[2]}"
    return Workload(label, lambda: kernels.edt_sq(occ, 1.0, 1.0, 1.25))


def dijkstra_workload(dims: tuple[int, int, int]) -> Workload:
    occ = cylinder_mask(dims, radius=4.0, length=dims[2] * 0.8)
    dist = np.sqrt(kernels.edt_sq(occ, 1.0, 1.0, 1.0))
    peak = float(dist.max())
    cost = np.where(occ, 1e5 * (1.0 - dist / peak) ** 4, np.inf)
    start = int(np.argmax(dist))
    # settle the whole component: no early stop, cost-weighted edges
    target = np.zeros(occ.size, np.uint8)
    label = f"dijkstra_grid cylinder {dims[0]}x{dims[1]}x{dims[2]}"
    return Workload(
        label,
        lambda: kernels.dijkstra_grid(
            cost, start, target, False, True, 1.0, 1.0, 1.0, NEIGHBOR_OFFSETS
        ),
    )


def spheres_workload(dims: tuple[int, int, int]) -> Workload:
    occ = cylinder_mask(dims, radius=4.0, length=dims[2] * 0.8)
    dist = np.sqrt(kernels.edt_sq(occ, 1.0, 1.0, 1.0))
    zc, yc, xc = np.nonzero(occ)
    step = max(1, zc.shape[0] // 400)
    pz, py, px = zc[::step].copy(), yc[::step].copy(), xc[::step].copy()
    label = f"mark_spheres  {pz.shape[0]} spheres in {dims[0]}x{dims[1]}x{dims[2]}"

    def run():
        visited = np.zeros(occ.shape, np.bool_)
        kernels.mark_spheres(visited, dist, pz, py, px, 1.8, 4.0, 1.0, 1.0, 1.0)
        return visited

    return Workload(label, run)


def build_workloads(full: bool) -> list[Workload]:
    workloads = [
        edt_workload((32, 32, 48)),
        dijkstra_workload((24, 24, 48)),
        spheres_workload((24, 24, 48)),
    ]
    if full:
        workloads += [
            edt_workload((56, 56, 80)),
            dijkstra_workload((32, 32, 72)),
            spheres_workload((32, 32, 72)),
        ]
    return workloads


def result_digest(result) -> str:
    parts = result if isinstance(result, tuple) else (result,)
    h = hashlib.sha256()
    for part in parts:
        arr = np.ascontiguousarray(np.asarray(part))
        h.update(arr.tobytes())
    return h.hexdigest()


def measure(workloads: list[Workload], repeats: int) -> list[dict]:
    rows = []
    for wl in workloads:
        digest = result_digest(wl.run())  # warm-up run also pays compile cost
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            wl.run()
            times.append(time.perf_counter() - t0)
        rows.append({"label": wl.label, "seconds": min(times), "sha256": digest})
    return rows


def fallback_rows(repeats: int, full: bool) -> list[dict]:
    cmd = [sys.executable, os.path.abspath(__file__), "--json-lane", "--repeats", str(repeats)]
    if full:
        cmd.append("--full")
    env = dict(os.environ, TUBEKIT_DISABLE_NUMBA="1")
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)["rows"]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3, help="timed runs per lane, best is kept")
    ap.add_argument("--full", action="store_true", help="add larger grids")
    ap.add_argument("--json-lane", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    rows = measure(build_workloads(args.full), args.repeats)

    if args.json_lane:
        lane = "numba" if kernels.NUMBA_ENABLED else "python"
        print(json.dumps({"lane": lane, "rows": rows}))
        return 0

    if not kernels.NUMBA_ENABLED:
        print("numba lane unavailable in this interpreter; showing the plain lane only")
        for row in rows:
            print(f"{row['label']:44s} {row['seconds']:9.4f}s")
        return 0

    plain = {row["label"]: row for row in fallback_rows(args.repeats, args.full)}
    header = f"{'workload':44s} {'numba':>10s} {'python':>10s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for row in rows:
        other = plain[row["label"]]
        if other["sha256"] != row["sha256"]:
            raise SystemExit(f"lane results differ on {row['label']}")
        ratio = other["seconds"] / row["seconds"]
        print(f"{row['label']:44s} {row['seconds']:9.4f}s {other['seconds']:9.4f}s {ratio:8.1f}x")
    print("lanes verified bit-identical on every workload")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
