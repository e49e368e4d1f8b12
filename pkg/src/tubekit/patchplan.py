"""Patch size reassignment driven by axis-wise fractal dimension.

Axes with low fractal dimension carry structure that is sparse along
that direction, so they can afford coarse patch extents; axes with high
fractal dimension need fine ones. rank_and_reassign redistributes an
initial patch size triple accordingly without changing the multiset of
sizes (except under the promote tie policy, which may duplicate the
larger size across tied axes).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .voxgrid import AXES

_RANK_NAMES = ("fd_min", "fd_mid", "fd_max")


@dataclass(frozen=True)
class PatchPlan:
    """Outcome of a patch size reassignment.

    provenance maps each axis to its fd rank, the size it received and
    whether a tie promotion touched it. notes collects human-readable
    remarks (ties, promotions, snapping).
    """

    initial_ps: tuple[int, int, int]
    fd: tuple[float, float, float]
    assigned_ps: tuple[int, int, int]
    tie_policy: str
    provenance: dict[str, dict]
    notes: tuple[str, ...] = ()
    divisor: int | None = None

    def to_dict(self) -> dict:
        def axis_map(triple):
            return {a: v for a, v in zip(AXES, triple)}

        return {
            "initial_ps": axis_map(self.initial_ps),
            "fd": axis_map(self.fd),
            "assigned_ps": axis_map(self.assigned_ps),
            "tie_policy": self.tie_policy,
            "divisor": self.divisor,
            "provenance": self.provenance,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PatchPlan":
        def triple(m, cast):
            return tuple(cast(m[a]) for a in AXES)

        return cls(
            initial_ps=triple(data["initial_ps"], int),
            fd=triple(data["fd"], float),
            assigned_ps=triple(data["assigned_ps"], int),
            tie_policy=data["tie_policy"],
            provenance=data.get("provenance", {}),
            notes=tuple(data.get("notes", ())),
            divisor=data.get("divisor"),
        )


def _validate(initial_ps, fd, tie_policy) -> tuple[tuple[int, int, int], tuple[float, float, float]]:
    if tie_policy not in ("stable", "promote"):
        raise ValueError(f"tie_policy must be 'stable' or 'promote', got {tie_policy!r}")
    ps = tuple(int(v) for v in initial_ps)
    if len(ps) != 3 or any(v < 1 for v in ps):
        raise ValueError(f"initial_ps must be three positive integers, got {initial_ps!r}")
    fds = tuple(float(v) for v in fd)
    if len(fds) != 3 or any(not (0.0 <= v <= 1.0) for v in fds):
        raise ValueError(f"fd must be three values in [0, 1], got {fd!r}")
    return ps, fds


def rank_and_reassign(
    initial_ps: tuple[int, int, int],
    fd: tuple[float, float, float],
    tie_policy: str = "stable",
) -> PatchPlan:
    """Redistribute patch sizes so low-fd axes get the large extents.

    Axes are ranked by ascending fd, ties broken by axis order (x before
    y before z); the sorted sizes are handed out largest first. Under
    "stable" that positional assignment is final, so the axis with
    maximal fd always ends up with the smallest initial size. Under
    "promote", a group of axes tied on fd all receive the largest size
    assigned within the group, except the group holding the maximal fd,
    which keeps the stable assignment. fd ties are exact float equality.
    """
    ps, fds = _validate(initial_ps, fd, tie_policy)

    asc = sorted(range(3), key=lambda i: (fds[i], i))
    sizes_desc = sorted(ps, reverse=True)
    assigned = [0, 0, 0]
    promoted = [False, False, False]
    notes: list[str] = []

    for pos, axis_i in enumerate(asc):
        assigned[axis_i] = sizes_desc[pos]

    if tie_policy == "promote":
        fd_max = max(fds)
        pos = 0
        while pos < 3:
            group = [pos]
            while pos + len(group) < 3 and fds[asc[pos + len(group)]] == fds[asc[pos]]:
                group.append(pos + len(group))
            if len(group) > 1 and fds[asc[pos]] != fd_max:
                best = max(sizes_desc[p] for p in group)
                members = [AXES[asc[p]] for p in group]
                for p in group:
                    if assigned[asc[p]] != best:
                        assigned[asc[p]] = best
                        promoted[asc[p]] = True
                notes.append(
                    f"axes {','.join(members)} tied at fd={fds[asc[pos]]:g}; promoted to {best}"
                )
            pos += len(group)

    provenance = {}
    for pos, axis_i in enumerate(asc):
        provenance[AXES[axis_i]] = {
            "rank": _RANK_NAMES[pos],
            "assigned": assigned[axis_i],
            "promoted": promoted[axis_i],
        }

    return PatchPlan(
        initial_ps=ps,
        fd=fds,
        assigned_ps=tuple(assigned),
        tie_policy=tie_policy,
        provenance=provenance,
        notes=tuple(notes),
    )


def snap_to_divisor(plan: PatchPlan, divisor: int) -> PatchPlan:
    """Snap each assigned size to the nearest multiple of divisor.

    Exact halfway cases round up, and every size stays at least one
    divisor. Snapping is monotone, so the relative ordering of sizes is
    preserved.
    """
    if divisor < 1:
        raise ValueError(f"divisor must be a positive integer, got {divisor}")
    out = []
    notes = list(plan.notes)
    for s in plan.assigned_ps:
        q = int(s // divisor)
        rem = s - q * divisor
        if rem * 2 >= divisor:
            q += 1
        q = max(1, q)
        out.append(q * divisor)
    if tuple(out) != plan.assigned_ps:
        notes.append(f"snapped {plan.assigned_ps} to multiples of {divisor}: {tuple(out)}")
        for i in range(3):
            for j in range(i + 1, 3):
                if plan.assigned_ps[i] != plan.assigned_ps[j] and out[i] == out[j]:
                    notes.append(
                        f"snapping collapsed the size distinction between axes "
                        f"{AXES[i]} and {AXES[j]} at {out[i]}"
                    )
    provenance = {
        a: {**plan.provenance.get(a, {}), "assigned": out[i]}
        for i, a in enumerate(AXES)
    }
    return replace(
        plan,
        assigned_ps=tuple(out),
        divisor=divisor,
        notes=tuple(notes),
        provenance=provenance,
    )
