"""Command-line front end.

Every subcommand is a thin wrapper over one library call: it parses
flags, reads volumes, invokes the library and serializes the result.
Logs go to standard error; machine-readable output goes to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import TubekitError
from .fractal import FractalReport, fractal_report
from .metrics import evaluate
from .mpcskel import (
    DEFAULT_ALPHA1,
    DEFAULT_GAMMA,
    RadiusParams,
    Skeleton,
    combine_weight_maps,
    skeleton_label_volume,
    skeletonize_multiclass,
    weight_map,
)
from .patchplan import rank_and_reassign, snap_to_divisor
from .phantoms import KINDS, PhantomSpec, generate, perturb
from .pipeline import PipelineConfig, run_pipeline
from .voxgrid import AXES, BinaryMask, LabelVolume
from .voxio import read_volume, write_volume
from . import edt as edt_mod

log = logging.getLogger("tubekit")


def _triple(text: str, kind=int, name: str = "triple") -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"{name} must be three comma-separated values: {text!r}")
    try:
        return tuple(kind(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_triple(text: str) -> tuple[int, int, int]:
    return _triple(text, int, "dims")


def _float_triple(text: str) -> tuple[float, float, float]:
    return _triple(text, float, "spacing")


def _write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_label_volume(path: str) -> LabelVolume:
    vol = read_volume(path)
    if isinstance(vol, LabelVolume):
        return vol
    if isinstance(vol, BinaryMask):
        return LabelVolume(vol.data.astype(np.uint8), vol.spacing)
    raise TubekitError(f"{path} holds scalar data, not labels")


def _radius_from_args(args, spacing) -> RadiusParams:
    if args.radius_units == "mm":
        return RadiusParams(args.alpha2, args.beta)
    return RadiusParams.from_spacing_max(args.alpha2, args.beta, spacing)


def _selected_classes(args, volume: LabelVolume) -> list[int]:
    if args.class_id is not None:
        return [args.class_id]
    return volume.labels()


def _add_skeleton_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha1", type=float, default=DEFAULT_ALPHA1, help="cost amplitude")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="cost exponent")
    p.add_argument("--alpha2", type=float, default=1.8, help="visitation radius slope")
    p.add_argument("--beta", type=float, default=4.0, help="visitation radius offset")
    p.add_argument(
        "--radius-units",
        choices=("spacing-max", "mm"),
        default="spacing-max",
        help="interpret alpha2/beta as multiples of the coarsest spacing, or as mm",
    )


def _add_class_selector(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--class", dest="class_id", type=int, metavar="N", help="one class id")
    group.add_argument("--all", action="store_true", help="every class present (default)")


def cmd_fd(args) -> int:
    volume = _read_label_volume(args.volume)
    if args.per_class:
        reports = fractal_report(volume, "per_class", args.scales)
        payload = {"per_class": {str(c): r.to_dict() for c, r in sorted(reports.items())}}
        for cid, rep in sorted(reports.items()):
            log.info("class %d fd: %s", cid, _fmt_fd(rep))
    else:
        report = fractal_report(volume, "foreground_union", args.scales)
        payload = report.to_dict()
        log.info("foreground fd: %s", _fmt_fd(report))
    _write_json(args.out, payload)
    log.info("wrote %s", args.out)
    return 0


def _fmt_fd(report: FractalReport) -> str:
    return ", ".join(f"{a}={report.fits[a].fd:.3f}" for a in AXES)


def cmd_plan_patch(args) -> int:
    data = json.loads(Path(args.fd_report).read_text())
    if "per_class" in data:
        raise TubekitError(
            "plan-patch needs a foreground-union fd report; rerun fd without --per-class"
        )
    fd_map = data["fd"] if "fd" in data else data
    try:
        fds = tuple(float(fd_map[a]) for a in AXES)
    except (KeyError, TypeError) as exc:
        raise TubekitError(f"fd report {args.fd_report} lacks per-axis fd values") from exc
    plan = rank_and_reassign(args.initial, fds, args.tie)
    if args.divisor is not None:
        plan = snap_to_divisor(plan, args.divisor)
    _write_json(args.out, plan.to_dict())
    log.info("assigned patch sizes: %s", dict(zip(AXES, plan.assigned_ps)))
    log.info("wrote %s", args.out)
    return 0


def cmd_edt(args) -> int:
    vol = read_volume(args.volume)
    mask = BinaryMask(vol.data != 0, vol.spacing)
    field = edt_mod.distance_transform(mask)
    write_volume(field.field, args.out)
    log.info(
        "max distance %.3f mm at voxel %s; wrote %s",
        field.max_dist,
        field.argmax_voxel,
        args.out,
    )
    return 0


def _path_record(path) -> dict:
    return {
        "start": list(path.start),
        "end": list(path.end),
        "cost": path.cost,
        "arc_length_mm": path.arc_length_mm,
        "voxels": path.voxels.tolist(),
    }


def _skeletonize_from_args(args, volume: LabelVolume) -> dict[int, Skeleton]:
    radius = _radius_from_args(args, volume.spacing)
    classes = _selected_classes(args, volume)
    return skeletonize_multiclass(
        volume, radius=radius, alpha1=args.alpha1, gamma=args.gamma, classes=classes
    )


def cmd_skel(args) -> int:
    volume = _read_label_volume(args.volume)
    skeletons = _skeletonize_from_args(args, volume)
    if not skeletons:
        raise TubekitError("no requested class has voxels; nothing to skeletonize")
    write_volume(skeleton_label_volume(skeletons), args.out)
    log.info(
        "skeletonized %d class(es): %s; wrote %s",
        len(skeletons),
        {c: s.voxel_count for c, s in sorted(skeletons.items())},
        args.out,
    )
    if args.paths:
        payload = {
            "params": {
                "alpha1": args.alpha1,
                "gamma": args.gamma,
                "alpha2": args.alpha2,
                "beta": args.beta,
                "radius_units": args.radius_units,
            },
            "classes": {
                str(c): [_path_record(p) for p in s.paths] for c, s in sorted(skeletons.items())
            },
        }
        _write_json(args.paths, payload)
        log.info("wrote %s", args.paths)
    return 0


def cmd_weights(args) -> int:
    volume = _read_label_volume(args.volume)
    skeletons = _skeletonize_from_args(args, volume)
    if not skeletons:
        raise TubekitError("no requested class has voxels; nothing to weight")
    maps = {
        cid: weight_map(sk, volume.class_mask(cid), args.mode, args.tau)
        for cid, sk in skeletons.items()
    }
    write_volume(combine_weight_maps(maps), args.out)
    log.info("wrote %s (%s weights for %d class(es))", args.out, args.mode, len(maps))
    return 0


def cmd_eval(args) -> int:
    pred = _read_label_volume(args.pred)
    ref = _read_label_volume(args.ref)
    report = evaluate(pred, ref)
    _write_json(args.out, report.to_dict())
    log.info("aggregate: %s", report.aggregate)
    log.info("wrote %s", args.out)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
        log.info("wrote %s", args.csv)
    return 0


def cmd_phantom(args) -> int:
    spec = PhantomSpec(
        kind=args.kind,
        dims=args.dims,
        spacing=args.spacing,
        radius_mm=args.radius,
        length_mm=args.length,
        major_radius_mm=args.major_radius,
        turns=args.turns,
        pitch_mm=args.pitch,
        angle_deg=args.angle,
        generations=args.generations,
    )
    phantom = generate(spec)
    if args.perturb > 0:
        phantom = perturb(phantom, args.perturb, args.seed)
    write_volume(phantom.volume, args.out)
    log.info(
        "%s phantom: %d foreground voxel(s); wrote %s",
        args.kind,
        int(np.count_nonzero(phantom.volume.data)),
        args.out,
    )
    if args.centerline:
        payload = {
            "spacing": list(spec.spacing),
            "classes": {
                str(cid): {
                    "polylines": [pl.tolist() for pl in phantom.centerlines[cid]],
                    "bifurcations": [list(b) for b in phantom.bifurcations.get(cid, [])],
                    "terminals": [list(t) for t in phantom.terminals.get(cid, [])],
                }
                for cid in sorted(phantom.centerlines)
            },
        }
        _write_json(args.centerline, payload)
        log.info("wrote %s", args.centerline)
    return 0


def cmd_pipeline(args) -> int:
    data = json.loads(Path(args.config).read_text())
    if args.dataset_dir:
        data["dataset_dir"] = args.dataset_dir
    if args.output_dir:
        data["output_dir"] = args.output_dir
    if args.threads is not None:
        data["workers"] = args.threads
    config = PipelineConfig.from_dict(data)
    summary = run_pipeline(config)
    log.info(
        "%d case(s) ok, %d failed; manifest at %s",
        summary.cases_ok,
        summary.cases_failed,
        summary.manifest_path,
    )
    return 0 if summary.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tubekit",
        description="Tubular-structure toolkit: fractal patch planning, "
        "minimum path-cost skeletons, weight maps, metrics and phantoms.",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker count for pipeline runs")
    parser.add_argument(
        "--log-level",
        default="info",
        choices=("debug", "info", "warning", "error"),
        help="stderr log verbosity",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized operations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fd", help="axis-specific fractal dimensions of a label volume")
    p.add_argument("volume", help="input label volume (.nii, .nii.gz, .bin)")
    p.add_argument("--per-class", action="store_true", help="one report per class id")
    p.add_argument("--scales", choices=("all", "pow2"), default="all", help="slab size ladder")
    p.add_argument("--out", required=True, help="output report JSON")
    p.set_defaults(func=cmd_fd)

    p = sub.add_parser("plan-patch", help="reassign patch sizes from a fractal report")
    p.add_argument("--fd-report", required=True, help="report JSON from the fd subcommand")
    p.add_argument("--initial", required=True, type=_int_triple, help="initial sizes, e.g. 112,112,176")
    p.add_argument("--tie", choices=("stable", "promote"), default="stable", help="tie policy")
    p.add_argument("--divisor", type=int, default=None, help="snap sizes to this multiple")
    p.add_argument("--out", required=True, help="output plan JSON")
    p.set_defaults(func=cmd_plan_patch)

    p = sub.add_parser("edt", help="exact Euclidean distance transform of a mask")
    p.add_argument("volume", help="input mask volume; any non-zero voxel is foreground")
    p.add_argument("--out", required=True, help="output distance volume in mm")
    p.set_defaults(func=cmd_edt)

    p = sub.add_parser("skel", help="minimum path-cost skeletons of a label volume")
    p.add_argument("volume", help="input label volume")
    _add_class_selector(p)
    _add_skeleton_params(p)
    p.add_argument("--out", required=True, help="output skeleton label volume")
    p.add_argument("--paths", default=None, help="optional JSON dump of every traced path")
    p.set_defaults(func=cmd_skel)

    p = sub.add_parser("weights", help="skeleton-derived loss weight map")
    p.add_argument("volume", help="input label volume")
    _add_class_selector(p)
    _add_skeleton_params(p)
    p.add_argument(
        "--mode",
        choices=("binary", "distance_decay"),
        default="binary",
        help="weight profile around the skeleton",
    )
    p.add_argument("--tau", type=float, default=None, help="decay length in mm")
    p.add_argument("--out", required=True, help="output weight volume")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("eval", help="segmentation metrics between two label volumes")
    p.add_argument("--pred", required=True, help="predicted label volume")
    p.add_argument("--ref", required=True, help="reference label volume")
    p.add_argument("--out", required=True, help="output metrics JSON")
    p.add_argument("--csv", default=None, help="optional CSV, one row per class")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("phantom", help="deterministic tubular phantom with analytic centerline")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--radius", type=float, default=4.0, help="tube radius in mm")
    p.add_argument("--length", type=float, default=80.0, help="length in mm")
    p.add_argument("--angle", type=float, default=30.0, help="branching angle in degrees")
    p.add_argument("--major-radius", type=float, default=12.0, help="ring/coil radius in mm")
    p.add_argument("--turns", type=float, default=2.0, help="helix turns")
    p.add_argument("--pitch", type=float, default=16.0, help="helix pitch in mm per turn")
    p.add_argument("--generations", type=int, default=3, help="tree depth")
    p.add_argument("--dims", required=True, type=_int_triple, help="grid size, e.g. 128,128,128")
    p.add_argument("--spacing", type=_float_triple, default=(1.0, 1.0, 1.0), help="voxel spacing mm")
    p.add_argument("--perturb", type=float, default=0.0, help="surface toggle probability")
    p.add_argument("--out", required=True, help="output volume")
    p.add_argument("--centerline", default=None, help="optional centerline JSON")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("pipeline", help="dataset-level preparation: fd, plan, skeletons, weights")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--dataset-dir", default=None, help="override config dataset_dir")
    p.add_argument("--output-dir", default=None, help="override config output_dir")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TubekitError as exc:
        log.error("%s", exc)
        return 2
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
