"""Command-line front end: calibrate, predict, evaluate, simulate.

Exit codes: 0 success, 1 I/O failure, 2 data/validation error, 3 usage
error.  Every command is deterministic given its flags (all randomness is
seeded explicitly), and output files are written atomically.  The
``CONFORMAL_GATE_LOG`` environment variable sets the log level (DEBUG,
INFO, WARNING, ERROR; default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import io as cgio
from .calibration import ALL_INCLUSIVE, Alpha, calibrate, export_calibration_curve
from .core_types import DataError
from .metrics import evaluate
from .predictor import PredictionSet, predict_batch
from .rng import nth_output
from .synth import SyntheticSpec, coverage_trial, generate

logger = logging.getLogger("conformal_gate.cli")

EXIT_OK = 0
EXIT_IO = 1
EXIT_DATA = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="conformal-gate",
        description="Split conformal prediction sets for multiclass classifier outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cal = sub.add_parser("calibrate", help="derive a threshold from calibration probabilities")
    cal.add_argument("--input", required=True, help="calibration file (CSV or JSONL)")
    cal.add_argument("--alpha", type=float, default=0.05, help="miscoverage rate (default 0.05)")
    cal.add_argument("--out", required=True, help="calibration artifact (JSON)")
    cal.add_argument("--curve", help="optional sorted-score curve CSV")
    cal.add_argument("--classes", help="classes.json mapping indices to names")

    pred = sub.add_parser("predict", help="emit prediction sets for a test file")
    pred.add_argument("--calibration", required=True, help="calibration artifact from `calibrate`")
    pred.add_argument("--input", required=True, help="test file (CSV or JSONL)")
    pred.add_argument("--out", required=True, help="prediction sets (JSONL)")
    pred.add_argument("--classes", help="classes.json mapping indices to names")

    ev = sub.add_parser("evaluate", help="score prediction sets against labels")
    ev.add_argument("--calibration", help="calibration artifact from `calibrate`")
    ev.add_argument("--input", required=True, help="labeled test file (CSV or JSONL)")
    ev.add_argument("--predictions",
                    help="precomputed prediction JSONL (replaces --calibration)")
    ev.add_argument("--out-json", required=True, help="full report (JSON)")
    ev.add_argument("--out-csv", required=True, help="per-class metric table (CSV)")
    ev.add_argument("--classes", help="classes.json mapping indices to names")

    sim = sub.add_parser("simulate", help="measure empirical coverage on synthetic data")
    sim.add_argument("--k", type=int, default=9, help="number of classes (default 9)")
    sim.add_argument("--n-calib", type=int, default=1000, help="calibration samples per trial")
    sim.add_argument("--n-test", type=int, default=10000, help="test samples per trial")
    sim.add_argument("--alpha", type=float, default=0.05, help="miscoverage rate (default 0.05)")
    sim.add_argument("--seeds", type=int, default=20, help="number of independent trials")
    sim.add_argument("--noise", type=float, default=0.1, help="wrong-class concentration probability")
    sim.add_argument("--sharpness", type=float, default=4.0, help="concentration on the target class")
    sim.add_argument("--seed", type=int, default=0, help="base seed (trials derive substreams)")
    sim.add_argument("--out", required=True, help="trial distribution (JSON)")
    sim.add_argument("--write-data", help="also write the last trial's calib/test CSVs to this directory")
    return parser


def _load_input(path: str, classes: str | None):
    universe = cgio.load_universe(classes) if classes else None
    return cgio.load_probabilities(path, universe=universe)


def _threshold_json(threshold: float):
    return "all_inclusive" if threshold == ALL_INCLUSIVE else threshold


def _threshold_from_json(value) -> float:
    if value == "all_inclusive":
        return ALL_INCLUSIVE
    return float(value)


def cmd_calibrate(args) -> int:
    dataset = _load_input(args.input, args.classes)
    result = calibrate(dataset, Alpha(args.alpha))
    artifact = {
        "alpha": result.alpha,
        "n": result.n,
        "qlevel": result.qlevel,
        "threshold": _threshold_json(result.threshold),
        "k": dataset.universe.k,
        "input_sha256": cgio.file_digest(args.input),
        "universe_sha256": cgio.universe_digest(dataset.universe),
    }
    cgio.write_atomic(args.out, json.dumps(artifact, indent=2) + "\n")
    if args.curve:
        cgio.write_curve(export_calibration_curve(result), args.curve)
    shown = "all_inclusive" if result.is_all_inclusive else f"{result.threshold:.6f}"
    print(f"calibrated on n={result.n} (alpha={result.alpha}): threshold {shown}")
    return EXIT_OK


def _read_artifact(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            artifact = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed calibration artifact {path}: {exc}") from exc
    if "threshold" not in artifact:
        raise DataError(f"calibration artifact {path} has no threshold")
    return artifact


def _warn_universe_mismatch(artifact: dict, universe) -> None:
    recorded = artifact.get("universe_sha256")
    if recorded and recorded != cgio.universe_digest(universe):
        logger.warning(
            "test file universe differs from the one used at calibration; "
            "proceeding with the artifact threshold"
        )


def cmd_predict(args) -> int:
    artifact = _read_artifact(args.calibration)
    dataset = _load_input(args.input, args.classes)
    _warn_universe_mismatch(artifact, dataset.universe)
    threshold = _threshold_from_json(artifact["threshold"])
    sets = predict_batch(dataset, threshold)
    lines = [
        json.dumps(ps.to_json_obj(true_label=ex.true_label))
        for ps, ex in zip(sets, dataset)
    ]
    cgio.write_atomic(args.out, "\n".join(lines) + ("\n" if lines else ""))
    print(f"wrote {len(sets)} prediction sets to {args.out}")
    return EXIT_OK


def _load_prediction_file(path: str) -> list[PredictionSet]:
    with open(path, "r", encoding="utf-8") as handle:
        rows = handle.read().splitlines()
    sets = []
    for offset, row in enumerate(rows, start=1):
        if not row.strip():
            continue
        try:
            obj = json.loads(row)
            sets.append(PredictionSet(str(obj["sample_id"]), frozenset(obj["members"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise cgio.ParseError(f"bad prediction record: {exc}", line=offset) from exc
    return sets


def _print_summary(report) -> None:
    width = max(len(name) for name in report.class_names + ("overall",))

    def fmt(value):
        return "   n/a" if value is None else f"{value:.4f}"

    print(f"{'class':<{width}}  recall  avg_set_size  strict_coverage")
    for i, name in enumerate(report.class_names):
        print(
            f"{name:<{width}}  {fmt(report.per_class_recall[i])}"
            f"  {fmt(report.per_class_avg_set_size[i]):>12}"
            f"  {fmt(report.per_class_strict_coverage[i]):>15}"
        )
    print(
        f"{'overall':<{width}}  {fmt(report.accuracy)}"
        f"  {fmt(report.overall_avg_set_size):>12}"
        f"  {fmt(report.overall_strict_coverage):>15}"
    )
    print(
        f"n={report.n_test}  marginal_coverage={report.marginal_coverage:.4f}"
        f"  uncertain={report.uncertain_total}"
    )


def cmd_evaluate(args) -> int:
    if not args.calibration and not args.predictions:
        print("error: evaluate needs --calibration or --predictions", file=sys.stderr)
        return EXIT_USAGE
    dataset = _load_input(args.input, args.classes)
    if args.predictions:
        sets = _load_prediction_file(args.predictions)
    else:
        artifact = _read_artifact(args.calibration)
        _warn_universe_mismatch(artifact, dataset.universe)
        threshold = _threshold_from_json(artifact["threshold"])
        sets = predict_batch(dataset, threshold)
    report = evaluate(dataset, sets)
    cgio.write_report(report, args.out_json, fmt="json")
    cgio.write_report(report, args.out_csv, fmt="csv")
    _print_summary(report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = SyntheticSpec(
        k=args.k,
        sharpness=args.sharpness,
        noise=args.noise,
        seed=args.seed,
    )
    result = coverage_trial(
        spec,
        n_calib=args.n_calib,
        n_test=args.n_test,
        alpha=Alpha(args.alpha),
        n_seeds=args.seeds,
    )
    cgio.write_atomic(args.out, json.dumps(result.to_json_obj(), indent=2) + "\n")
    if args.write_data:
        out_dir = Path(args.write_data)
        out_dir.mkdir(parents=True, exist_ok=True)
        last = args.seeds - 1
        calib = generate(replace(spec, seed=nth_output(spec.seed, 2 * last)), args.n_calib)
        test = generate(replace(spec, seed=nth_output(spec.seed, 2 * last + 1)), args.n_test)
        cgio.write_dataset(calib, out_dir / "calibration.csv")
        cgio.write_dataset(test, out_dir / "test.csv")
    print(
        f"coverage over {args.seeds} seeds: mean={result.mean:.4f} std={result.std:.4f}"
        f" min={result.min:.4f} max={result.max:.4f} (target {1 - args.alpha:.4f})"
    )
    return EXIT_OK


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
}


def _configure_logging() -> None:
    level_name = os.environ.get("CONFORMAL_GATE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
