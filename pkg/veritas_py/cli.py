"""
Command-line interface.

    veritas <subcommand> [options]

Tabular results go to stdout as CSV, structured results as JSON, logs to
stderr. Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .atlas.averaging import weighted_average
from .atlas.landmarks import read_landmark_csv, write_solution_json
from .atlas.procrustes import procrustes_solve
from .contracts.intensity import fit_gmm2_volume
from .core.conditions import Condition
from .core.io import read_volume, write_volume
from .core.preview import save_slice_png
from .core.volumes import LabelSetVolume, MaskVolume, ProbabilityVolume, ScalarVolume
from .dempster.bpa import Bpa
from .dempster.rules import combine_many
from .dro.toy import TrainingMode, make_blobs, select_beta, toy_train
from .fallback.multi_atlas import fuse_atlases, load_atlas_manifest
from .fallback.selection import FusionParams, select_atlases
from .labelset.losses import LABEL_SET_LOSSES
from .metrics.margins import tune_margin_table
from .metrics.overlap import dice
from .metrics.surface import hd95, hd95_fn
from .pipeline import TrustworthySegmenter
from .utils.config import load_json, require_keys, save_json
from .utils.constants import DEFAULT_DICE_ALPHA, DEFAULT_DICE_EPSILON, DEFAULT_INCIDENT_THRESHOLD
from .utils.exceptions import ConfigError, NumericalError, PartitionError, ValidationError
from .utils.helpers import resolve_seed, resolve_threads
from .utils.logger import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


class UsageError(ValidationError):
    """Command line could not be parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _csv_writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def _print_json(data):
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _read(path: str, expected: type, what: str):
    vol = read_volume(path)
    if not isinstance(vol, expected):
        raise ValidationError(f"{path}: expected a {what} volume, got {type(vol).__name__}")
    return vol


# Subcommands


def cmd_fuse(args) -> int:
    p_ai = _read(args.ai, ProbabilityVolume, "probability")
    p_fb = _read(args.fallback, ProbabilityVolume, "probability")
    image = _read(args.image, ScalarVolume, "scalar")
    condition = Condition.parse(args.condition) if args.condition else None
    segmenter = TrustworthySegmenter.from_config_file(
        args.config, condition, threads=args.threads, incident_threshold=args.incident_threshold
    )
    result = segmenter.segment(p_ai, p_fb, image, epsilon=args.epsilon)

    write_volume(result.fused, args.out)
    if args.conflict:
        write_volume(result.conflict, args.conflict)
    if args.conflict_png:
        save_slice_png(result.conflict, args.conflict_png, vmin=0.0, vmax=1.0)
    _print_json({
        "out": str(args.out),
        "incident_fraction": result.incident_fraction,
        "incident_threshold": args.incident_threshold,
        "gmm": result.gmm.to_json(),
    })
    return EXIT_OK


def cmd_fallback_fuse(args) -> int:
    entries = load_atlas_manifest(args.manifest)
    subject = _read(args.image, ScalarVolume, "scalar")
    mask = _read(args.mask, MaskVolume, "mask") if args.mask else None
    params = FusionParams(alpha=args.alpha, gauss_sigma_mm=args.sigma_mm, bspline_spacing_vox=args.knot_spacing)
    selected = select_atlases(entries, args.ga_weeks, Condition.parse(args.condition), params)
    fused = fuse_atlases(selected, subject, params, mask, args.threads)
    write_volume(fused, args.out)
    _print_json({"out": str(args.out), "atlases": [e.id for e in selected]})
    return EXIT_OK


def _load_margin_cases(path: str) -> Dict[Tuple[str, Condition], List[Tuple[MaskVolume, MaskVolume]]]:
    base = Path(path).parent
    items = load_json(path)
    if not isinstance(items, list):
        raise ConfigError(f"{path}: expected a JSON list of cases")
    cases: Dict[Tuple[str, Condition], List[Tuple[MaskVolume, MaskVolume]]] = {}
    for i, item in enumerate(items):
        require_keys(item, ["class", "condition", "pred", "gt"], f"margin case {i}")
        pred = _read(str(base / item["pred"]), MaskVolume, "mask")
        gt = _read(str(base / item["gt"]), MaskVolume, "mask")
        cases.setdefault((item["class"], Condition.parse(item["condition"])), []).append((pred, gt))
    return cases


def cmd_tune_margins(args) -> int:
    cases = _load_margin_cases(args.cases)
    table = tune_margin_table(cases)
    if args.out:
        table.save(args.out)
    writer = _csv_writer()
    writer.writerow(["class", "condition", "eta_mm", "n_pairs"])
    for (class_name, condition), pairs in sorted(cases.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        writer.writerow([class_name, condition.value, table.get(class_name, condition), len(pairs)])
    return EXIT_OK


def cmd_fit_gmm(args) -> int:
    image = _read(args.image, ScalarVolume, "scalar")
    mask = _read(args.mask, MaskVolume, "mask") if args.mask else None
    gmm = fit_gmm2_volume(image, mask)
    if args.out:
        save_json(gmm.to_json(), args.out)
    _print_json(gmm.to_json())
    return EXIT_OK


def cmd_procrustes(args) -> int:
    configs, landmark_ids = read_landmark_csv(args.landmarks)
    solution = procrustes_solve(configs, args.ga_target)
    if args.out:
        write_solution_json(solution, args.out, landmark_ids)
    _print_json(solution.to_json(landmark_ids))
    return EXIT_OK


def cmd_atlas_average(args) -> int:
    base = Path(args.manifest).parent
    items = load_json(args.manifest)
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{args.manifest}: expected a non-empty JSON list")
    volumes, ages, masks = [], [], []
    for i, item in enumerate(items):
        require_keys(item, ["image", "ga_days"], f"average entry {i}")
        volumes.append(_read(str(base / item["image"]), ScalarVolume, "scalar"))
        ages.append(float(item["ga_days"]))
        masks.append(_read(str(base / item["mask"]), MaskVolume, "mask") if item.get("mask") else None)
    if any(m is None for m in masks) and not all(m is None for m in masks):
        raise ConfigError("either every entry or no entry of the average manifest has a mask")
    average = weighted_average(
        volumes, ages, args.ga_target, flip_axis=args.flip_axis,
        masks=None if masks[0] is None else masks, sigma_days=args.sigma_days,
    )
    write_volume(average, args.out)
    _print_json({"out": str(args.out), "n_volumes": len(volumes), "ga_target_days": args.ga_target})
    return EXIT_OK


def cmd_losses(args) -> int:
    probs = _read(args.probs, ProbabilityVolume, "probability")
    labels = _read(args.labels, LabelSetVolume, "label-set")
    probs.meta.check_same(labels.meta, "probabilities and label-sets")
    if labels.K != probs.K:
        raise ValidationError(f"label-set volume has K={labels.K}, probabilities have K={probs.K}")
    p = probs.data.reshape(-1, probs.K)
    g = labels.data.reshape(-1).astype(np.int64)

    writer = _csv_writer()
    writer.writerow(["loss", "value"])
    for name, fn in LABEL_SET_LOSSES.items():
        if name == "marginal_cross_entropy":
            value = fn(p, g)
        else:
            try:
                value = fn(p, g, args.alpha, args.eps)
            except PartitionError as e:
                logger.warning(f"Skipping {name}: {e}")
                continue
        writer.writerow([name, value])
    return EXIT_OK


def cmd_dro_demo(args) -> int:
    seed = resolve_seed(args.seed)
    n_minority = max(1, int(round(args.minority_fraction * 2 * args.n_major)))
    train = make_blobs((args.n_major, args.n_major, n_minority), seed=seed)
    kwargs = dict(lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=seed)
    mode = TrainingMode.parse(args.mode)
    beta = args.beta
    if mode is TrainingMode.DRO and args.select_beta:
        validation = make_blobs((args.n_major, args.n_major, n_minority), seed=seed + 1)
        beta, _ = select_beta(train, validation, **kwargs)
    result = toy_train(train, mode=mode, beta=beta, **kwargs)

    writer = _csv_writer()
    columns = list(result.history[0].keys())
    writer.writerow(columns)
    for row in result.history:
        writer.writerow([row[c] for c in columns])
    return EXIT_OK


def cmd_metrics(args) -> int:
    a = _read(args.a, MaskVolume, "mask")
    b = _read(args.b, MaskVolume, "mask")
    a.meta.check_same(b.meta, "masks")
    case_id = args.case_id if args.case_id is not None else Path(args.a).stem
    writer = _csv_writer()
    writer.writerow(["case_id", "class", "dice", "hd95", "hd95_fn"])
    writer.writerow([case_id, args.class_name, dice(a, b), hd95(a, b), hd95_fn(a, b)])
    return EXIT_OK


def cmd_combine_bpa(args) -> int:
    bpas = [Bpa.load(path) for path in args.bpa]
    combined = combine_many(bpas)
    if args.out:
        combined.save(args.out)
    _print_json(combined.to_json())
    return EXIT_OK


# Parser


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None, help="Log level (default: VERITAS_LOG_LEVEL or INFO)")
    common.add_argument("--threads", type=int, default=None, help="Thread cap (default: VERITAS_THREADS or CPU count)")
    common.add_argument("--seed", type=int, default=None, help="Random seed (default: VERITAS_SEED or 0)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="veritas", description="Trustworthy segmentation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>", parser_class=_Parser)
    common = _common()

    p = sub.add_parser("fuse", parents=[common], help="Trustworthy fusion of AI and fallback probabilities")
    p.add_argument("--ai", required=True, help="Backbone AI probability volume")
    p.add_argument("--fallback", required=True, help="Fallback probability volume")
    p.add_argument("--image", required=True, help="Subject image volume")
    p.add_argument("--config", required=True, help="Contract configuration JSON")
    p.add_argument("--out", required=True, help="Output probability volume")
    p.add_argument("--conflict", help="Output conflict map volume")
    p.add_argument("--conflict-png", help="PNG preview of the middle conflict slice")
    p.add_argument("--epsilon", type=float, default=None, help="Override the configured epsilon")
    p.add_argument("--condition", help="Column of a nested margin table")
    p.add_argument("--incident-threshold", type=float, default=DEFAULT_INCIDENT_THRESHOLD,
                   help="Conflict level counted as an incident")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("fallback-fuse", parents=[common], help="Heat-kernel multi-atlas fallback")
    p.add_argument("--manifest", required=True, help="Atlas manifest JSON")
    p.add_argument("--image", required=True, help="Subject image volume")
    p.add_argument("--ga-weeks", type=float, required=True, help="Subject gestational age in weeks")
    p.add_argument("--condition", required=True, help="neurotypical, spina_bifida or other")
    p.add_argument("--out", required=True, help="Output probability volume")
    p.add_argument("--mask", help="Brain mask for intensity normalisation")
    p.add_argument("--alpha", type=float, default=FusionParams.alpha, help="SSD weight in the distance")
    p.add_argument("--sigma-mm", type=float, default=FusionParams.gauss_sigma_mm, help="Displacement low-pass sigma")
    p.add_argument("--knot-spacing", type=int, default=FusionParams.bspline_spacing_vox,
                   help="B-spline knot spacing in voxels")
    p.set_defaults(func=cmd_fallback_fuse)

    p = sub.add_parser("tune-margins", parents=[common], help="Tune contract margins from HD95 of false negatives")
    p.add_argument("--cases", required=True, help="JSON list of {class, condition, pred, gt}")
    p.add_argument("--out", help="Output margin table JSON")
    p.set_defaults(func=cmd_tune_margins)

    p = sub.add_parser("fit-gmm", parents=[common], help="Fit the two-component intensity GMM")
    p.add_argument("--image", required=True, help="Image volume")
    p.add_argument("--mask", help="Restrict the fit to this mask")
    p.add_argument("--out", help="Output GMM JSON")
    p.set_defaults(func=cmd_fit_gmm)

    p = sub.add_parser("procrustes", parents=[common], help="Weighted Procrustes alignment of landmarks")
    p.add_argument("--landmarks", required=True, help="Landmark CSV")
    p.add_argument("--ga-target", type=float, default=None, help="Target gestational age in days")
    p.add_argument("--out", help="Output solution JSON")
    p.set_defaults(func=cmd_procrustes)

    p = sub.add_parser("atlas-average", parents=[common], help="Symmetric temporally weighted average")
    p.add_argument("--manifest", required=True, help="JSON list of {image, ga_days, mask?}")
    p.add_argument("--ga-target", type=float, required=True, help="Target gestational age in days")
    p.add_argument("--out", required=True, help="Output scalar volume")
    p.add_argument("--flip-axis", type=int, default=0, choices=[0, 1, 2], help="Mirror axis")
    p.add_argument("--sigma-days", type=float, default=3.0, help="Temporal standard deviation")
    p.set_defaults(func=cmd_atlas_average)

    p = sub.add_parser("losses", parents=[common], help="Label-set loss values")
    p.add_argument("--probs", required=True, help="Probability volume")
    p.add_argument("--labels", required=True, help="Label-set volume")
    p.add_argument("--alpha", type=int, default=DEFAULT_DICE_ALPHA, choices=[1, 2], help="Dice exponent")
    p.add_argument("--eps", type=float, default=DEFAULT_DICE_EPSILON, help="Dice smoothing constant")
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("dro-demo", parents=[common], help="ERM vs DRO on imbalanced blobs")
    p.add_argument("--mode", default="dro", choices=["erm", "dro"], help="Training mode")
    p.add_argument("--beta", type=float, default=10.0, help="DRO robustness parameter")
    p.add_argument("--select-beta", action="store_true", help="Pick beta from {1, 10, 100} on a validation split")
    p.add_argument("--epochs", type=int, default=20, help="Training epochs")
    p.add_argument("--lr", type=float, default=0.1, help="Step size")
    p.add_argument("--batch-size", type=int, default=32, help="Batch size")
    p.add_argument("--n-major", type=int, default=500, help="Points per majority class")
    p.add_argument("--minority-fraction", type=float, default=0.01, help="Minority share of the data")
    p.set_defaults(func=cmd_dro_demo)

    p = sub.add_parser("metrics", parents=[common], help="Dice, HD95 and HD95 of false negatives")
    p.add_argument("--a", required=True, help="Predicted mask")
    p.add_argument("--b", required=True, help="Reference mask")
    p.add_argument("--case-id", default=None, help="Case identifier (default: stem of --a)")
    p.add_argument("--class", dest="class_name", default="foreground", help="Class the masks delineate")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("combine-bpa", parents=[common], help="Dempster combination of BPA JSON files")
    p.add_argument("--bpa", required=True, nargs="+", help="BPA JSON files")
    p.add_argument("--out", help="Output BPA JSON")
    p.set_defaults(func=cmd_combine_bpa)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID

    setup_logging(level=args.log_level)
    args.threads = resolve_threads(args.threads)
    try:
        return args.func(args)
    except (ValidationError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except NumericalError as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
