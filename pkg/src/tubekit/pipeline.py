"""Dataset-level data preparation pipeline.

Given a directory of label volumes, the pipeline measures the fractal
dimensions of every case, aggregates them into one patch plan, emits
per-case per-class skeletons and weight maps, and records everything in
a manifest. Case failures are contained: the manifest reports partial
results and the summary counts the failures.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .fractal import fractal_report
from .mpcskel import (
    DEFAULT_ALPHA1,
    DEFAULT_GAMMA,
    RadiusParams,
    skeleton_label_volume,
    skeletonize_multiclass,
    weight_map,
)
from .patchplan import PatchPlan, rank_and_reassign, snap_to_divisor
from .voxgrid import AXES, LabelVolume
from .voxio import read_volume, write_volume

log = logging.getLogger("tubekit.pipeline")

_VOLUME_SUFFIXES = (".nii", ".nii.gz", ".bin")


@dataclass(frozen=True)
class PipelineConfig:
    """Inputs of one pipeline run."""

    dataset_dir: Path
    output_dir: Path
    initial_ps: tuple[int, int, int]
    tie_policy: str = "stable"
    alpha1: float = DEFAULT_ALPHA1
    gamma: float = DEFAULT_GAMMA
    alpha2: float = 1.8
    beta: float = 4.0
    radius_units: str = "spacing-max"
    scales: str = "all"
    weight_mode: str = "binary"
    tau: float | None = None
    divisor: int | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset_dir", Path(self.dataset_dir))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "initial_ps", tuple(int(v) for v in self.initial_ps))
        if len(self.initial_ps) != 3 or any(v < 1 for v in self.initial_ps):
            raise ValueError(f"initial_ps must be three positive integers, got {self.initial_ps}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.tie_policy not in ("stable", "promote"):
            raise ValueError(f"tie_policy must be 'stable' or 'promote', got {self.tie_policy!r}")
        if self.radius_units not in ("spacing-max", "mm"):
            raise ValueError(
                f"radius_units must be 'spacing-max' or 'mm', got {self.radius_units!r}"
            )
        if min(self.alpha1, self.gamma) <= 0 or self.alpha2 < 0 or self.beta < 0:
            raise ValueError("skeleton parameters must be positive")
        if not self.dataset_dir.is_dir():
            raise ValueError(f"dataset_dir {self.dataset_dir} is not a directory")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "dataset_dir": str(self.dataset_dir),
            "output_dir": str(self.output_dir),
            "initial_ps": list(self.initial_ps),
            "tie_policy": self.tie_policy,
            "alpha1": self.alpha1,
            "gamma": self.gamma,
            "alpha2": self.alpha2,
            "beta": self.beta,
            "radius_units": self.radius_units,
            "scales": self.scales,
            "weight_mode": self.weight_mode,
            "tau": self.tau,
            "divisor": self.divisor,
            "workers": self.workers,
        }


@dataclass(frozen=True)
class PipelineSummary:
    manifest: dict
    manifest_path: Path
    plan: PatchPlan | None
    cases_ok: int
    cases_failed: int

    @property
    def ok(self) -> bool:
        return self.cases_failed == 0 and self.cases_ok > 0


def _case_name(path: Path) -> str:
    name = path.name
    for suffix in (".nii.gz", ".nii", ".bin"):
        if name.lower().endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def discover_cases(dataset_dir: Path) -> list[Path]:
    """Label volumes in a dataset directory, sorted by file name."""
    out = []
    for p in sorted(dataset_dir.iterdir()):
        if p.is_file() and p.name.lower().endswith(_VOLUME_SUFFIXES):
            out.append(p)
    return out


def _radius_for(config: PipelineConfig, spacing) -> RadiusParams:
    if config.radius_units == "mm":
        return RadiusParams(config.alpha2, config.beta)
    return RadiusParams.from_spacing_max(config.alpha2, config.beta, spacing)


def _run_case(config: PipelineConfig, path: Path) -> dict:
    name = _case_name(path)
    entry: dict = {"name": name, "input": str(path), "status": "ok"}
    volume = read_volume(path)
    if not isinstance(volume, LabelVolume):
        raise ValueError(f"{path.name} is not a label volume")

    report = fractal_report(volume, "foreground_union", config.scales)
    entry["fd"] = {a: report.fits[a].fd for a in AXES}
    entry["fd_low_confidence"] = report.low_confidence

    radius = _radius_for(config, volume.spacing)
    skeletons = skeletonize_multiclass(
        volume, radius=radius, alpha1=config.alpha1, gamma=config.gamma
    )
    case_dir = config.output_dir / name
    case_dir.mkdir(parents=True, exist_ok=True)

    skel_files: dict[str, str] = {}
    weight_files: dict[str, str] = {}
    for cid, skel in skeletons.items():
        sk_path = case_dir / f"skel_class{cid}.nii.gz"
        write_volume(skel.mask, sk_path)
        skel_files[str(cid)] = str(sk_path)
        wmap = weight_map(skel, volume.class_mask(cid), config.weight_mode, config.tau)
        w_path = case_dir / f"weights_class{cid}.nii.gz"
        write_volume(wmap, w_path)
        weight_files[str(cid)] = str(w_path)

    combined = skeleton_label_volume(skeletons)
    combined_path = case_dir / "skeleton_labels.nii.gz"
    write_volume(combined, combined_path)

    entry["classes"] = sorted(skeletons)
    entry["outputs"] = {
        "skeletons": skel_files,
        "weights": weight_files,
        "skeleton_labels": str(combined_path),
    }
    return entry


def run_pipeline(config: PipelineConfig) -> PipelineSummary:
    """Run the full data-preparation pipeline over a dataset directory.

    Per-case failures are logged, counted and recorded in the manifest;
    the plan aggregates the cases that succeeded.
    """
    cases = discover_cases(config.dataset_dir)
    if not cases:
        raise ValueError(f"no volumes found in {config.dataset_dir}")
    config.output_dir.mkdir(parents=True, exist_ok=True)

    def guarded(path: Path) -> dict:
        try:
            return _run_case(config, path)
        except Exception as exc:  # contained per-case failure
            log.error("case %s failed: %s", path.name, exc)
            return {
                "name": _case_name(path),
                "input": str(path),
                "status": "error",
                "error": str(exc),
            }

    if config.workers == 1:
        entries = [guarded(p) for p in cases]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            entries = list(pool.map(guarded, cases))
    entries.sort(key=lambda e: e["name"])

    succeeded = [e for e in entries if e["status"] == "ok"]
    failed = [e for e in entries if e["status"] != "ok"]

    plan = None
    dataset_fd = None
    if succeeded:
        fd_rows = np.array([[e["fd"][a] for a in AXES] for e in succeeded])
        mean_fd = fd_rows.mean(axis=0)
        dataset_fd = {a: float(v) for a, v in zip(AXES, mean_fd)}
        plan = rank_and_reassign(config.initial_ps, tuple(mean_fd), config.tie_policy)
        if config.divisor:
            plan = snap_to_divisor(plan, config.divisor)
        plan_path = config.output_dir / "plan.json"
        _write_json(plan_path, plan.to_dict())

    manifest = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": config.to_dict(),
        "fd_aggregation": "mean of per-case fd triples",
        "dataset_fd": dataset_fd,
        "plan": plan.to_dict() if plan else None,
        "cases": entries,
        "case_count": len(entries),
        "failures": len(failed),
    }
    manifest_path = config.output_dir / "manifest.json"
    _write_json(manifest_path, manifest)

    log.info(
        "pipeline finished: %d case(s) ok, %d failed, manifest at %s",
        len(succeeded),
        len(failed),
        manifest_path,
    )
    return PipelineSummary(
        manifest=manifest,
        manifest_path=manifest_path,
        plan=plan,
        cases_ok=len(succeeded),
        cases_failed=len(failed),
    )


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
