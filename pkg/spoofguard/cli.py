"""Command-line interface for spoofguard."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable

from spoofguard import __version__
from spoofguard.attacks import build_campaign
from spoofguard.config import PredictorKind, RunConfig, apply_seed, config_hash, load_config
from spoofguard.detector import (
    Calibration,
    DetectorConfig,
    calibrate_detector,
    detect_calibrated,
    load_calibration,
    save_calibration,
)
from spoofguard.errors import ConfigError, DataValidationError, SpoofGuardError
from spoofguard.ingest import WindowSet, load_csv, save_csv, window_arrays
from spoofguard.metrics import evaluate, window_truth
from spoofguard.models import AttackClass, StaticThresholds, Trajectory
from spoofguard.predictor import KinematicPredictor, Predictor, load_model, mlp_train, save_model
from spoofguard.reports import (
    parse_verdicts_csv,
    render_confusion_csv,
    render_detection_json,
    render_loss_csv,
    render_metrics_json,
    render_roc_csv,
    render_table2,
    render_verdicts_csv,
)
from spoofguard.synthetic import generate_synthetic

logger = logging.getLogger(__name__)

RUN_LOG = "run.log"
MANIFEST = "manifest.json"


def main(args: list[str] | None = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    try:
        parsed = parser.parse_args(args)
    except SystemExit as e:
        # argparse exits 2 on usage errors; usage errors are exit code 1 here
        return 0 if e.code in (0, None) else 1

    try:
        return run(parsed)
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        return 130
    except SpoofGuardError as e:
        print(f"Error: {e}", file=sys.stderr)
        if parsed.verbose:
            import traceback

            traceback.print_exc()
        return e.exit_code
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        if parsed.verbose:
            import traceback

            traceback.print_exc()
        return 1


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog="spoofguard",
        description="Detect GPS spoofing in vehicle logs by cross-checking GPS against dead reckoning.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  spoofguard pipeline --out run1                 Full synthetic experiment into run1/
  spoofguard gen --out run1 --seed 7             Generate clean synthetic drives
  spoofguard calibrate --out run1                Thresholds and warm start from run1/clean
  spoofguard calibrate --data logs/ --out run2   Calibrate on your own clean CSV logs
  spoofguard inject --out run1 --kind stop       Build a stop-attack campaign only
  spoofguard detect --out run1 --jobs 4          Detect on every attacked file in parallel
  spoofguard detect --out run1 drive.csv         Detect on one file
  spoofguard evaluate --out run1                 Score verdicts, write metrics.json and table2.md

Output directory layout:
  clean/ calibration.json model.json loss_history.csv attacked/ verdicts/
  metrics.json table2.md confusion.csv roc_points.csv run.log
""",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        "-c",
        type=str,
        default=None,
        help="JSON run config (default: built-in defaults)",
    )
    common.add_argument(
        "--out",
        "-o",
        type=str,
        default="spoofguard-out",
        help="Output directory (default: spoofguard-out)",
    )
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Override the synthetic, training and campaign seeds",
    )
    common.add_argument(
        "--data",
        type=str,
        default=None,
        help="Directory of clean CSV logs (default: <out>/clean)",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress (-v) or debug detail (-vv) to stderr",
    )

    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    commands.add_parser("gen", parents=[common], help="Generate clean synthetic trajectories")
    commands.add_parser("calibrate", parents=[common], help="Calibrate thresholds and warm-start state")
    commands.add_parser("train", parents=[common], help="Train the MLP displacement predictor")

    inject = commands.add_parser("inject", parents=[common], help="Build a labeled attack campaign")
    inject.add_argument(
        "--kind",
        action="append",
        choices=[k.value for k in AttackClass.attacks()],
        default=None,
        help="Attack kind to inject; repeat for several (default: all four)",
    )

    detect = commands.add_parser("detect", parents=[common], help="Run the detector over trajectory files")
    detect.add_argument(
        "inputs",
        nargs="*",
        help="CSV files to check (default: every file in <out>/attacked)",
    )
    detect.add_argument(
        "--jobs",
        "-j",
        type=int,
        default=1,
        help="Worker processes for per-file detection (default: 1)",
    )

    evaluate_cmd = commands.add_parser("evaluate", parents=[common], help="Score verdicts against labels")
    evaluate_cmd.add_argument("--title", type=str, default=None, help="Heading for table2.md")

    pipeline = commands.add_parser("pipeline", parents=[common], help="gen, train, calibrate, inject, detect, evaluate")
    pipeline.add_argument("--jobs", "-j", type=int, default=1, help="Worker processes for detection")
    pipeline.add_argument("--title", type=str, default=None, help="Heading for table2.md")

    return parser


def _configure_logging(verbosity: int, out: Path) -> list[logging.Handler]:
    package_logger = logging.getLogger("spoofguard")
    package_logger.setLevel(logging.DEBUG)

    console = logging.StreamHandler(sys.stderr)
    console.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG))
    console.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))

    out.mkdir(parents=True, exist_ok=True)
    run_log = logging.FileHandler(out / RUN_LOG, encoding="utf-8")
    run_log.setLevel(logging.DEBUG if verbosity > 1 else logging.INFO)
    run_log.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))

    handlers: list[logging.Handler] = [console, run_log]
    for handler in handlers:
        package_logger.addHandler(handler)
    return handlers


def _release_logging(handlers: list[logging.Handler]) -> None:
    package_logger = logging.getLogger("spoofguard")
    for handler in handlers:
        package_logger.removeHandler(handler)
        handler.close()


def run(args: argparse.Namespace) -> int:
    """Run a subcommand with parsed arguments."""
    out = Path(args.out)
    handlers = _configure_logging(args.verbose, out)
    try:
        cfg = apply_seed(load_config(args.config), args.seed)
        logger.info(
            "spoofguard %s: %s (config %s, out %s)",
            __version__,
            args.command,
            config_hash(cfg),
            out,
        )
        status = COMMANDS[args.command](args, cfg, out)
        logger.info("%s finished with status %d", args.command, status)
        return status
    finally:
        _release_logging(handlers)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _meta(cfg: RunConfig) -> dict[str, Any]:
    """Run metadata recorded in every report."""
    return {
        "config_hash": config_hash(cfg),
        "seeds": {"synth": cfg.synth.seed, "train": cfg.train.seed, "campaign": cfg.campaign.seed},
        "predictor": cfg.predictor.kind.value,
    }


def _clean_dir(args: argparse.Namespace, cfg: RunConfig, out: Path) -> Path:
    if args.data is not None:
        return Path(args.data)
    if cfg.paths.data is not None:
        return Path(cfg.paths.data)
    return out / "clean"


def _csv_files(directory: Path, hint: str) -> list[Path]:
    files = sorted(directory.glob("*.csv")) if directory.is_dir() else []
    if not files:
        raise DataValidationError(f"no CSV files in {directory} ({hint})")
    return files


def _read_clean(args: argparse.Namespace, cfg: RunConfig, out: Path) -> list[Trajectory]:
    files = _csv_files(_clean_dir(args, cfg, out), "run 'spoofguard gen' or pass --data")
    logger.info("Reading %d clean file(s)", len(files))
    return [load_csv(f) for f in files]


def _model_path(cfg: RunConfig, out: Path) -> Path:
    return Path(cfg.paths.model) if cfg.paths.model is not None else out / "model.json"


def _calibration_path(cfg: RunConfig, out: Path) -> Path:
    return Path(cfg.paths.calibration) if cfg.paths.calibration is not None else out / "calibration.json"


def _predictor(cfg: RunConfig, out: Path) -> Predictor:
    if cfg.predictor.kind is PredictorKind.MLP:
        return load_model(_model_path(cfg, out))
    return KinematicPredictor()


def _thresholds(cfg: RunConfig, out: Path) -> StaticThresholds:
    fixed = cfg.thresholds.fixed()
    return fixed if fixed is not None else load_calibration(_calibration_path(cfg, out)).thresholds


def cmd_gen(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    """Write one synthetic clean trajectory per configured seed."""
    spec = cfg.synth.spec()
    target = _clean_dir(args, cfg, out)
    for i, seed in enumerate(cfg.synth.seeds()):
        traj = generate_synthetic(spec, seed)
        path = save_csv(traj, target / f"clean_{i:02d}.csv")
        logger.info("Wrote %s (%d samples, seed %d)", path, len(traj), seed)
        print(path)
    return 0


def cmd_calibrate(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    clean = _read_clean(args, cfg, out)
    adaptive = cfg.adaptive
    cal = calibrate_detector(
        clean,
        _predictor(cfg, out),
        k=adaptive.k,
        epsilon_floor=adaptive.epsilon_floor,
        sigma_update=adaptive.sigma_update,
    )
    fixed = cfg.thresholds.fixed()
    if fixed is not None:
        logger.info("Using %s thresholds instead of calibrated ones", cfg.thresholds.mode.value)
        cal = replace(cal, thresholds=fixed)
    path = save_calibration(cal, _calibration_path(cfg, out))
    th = cal.thresholds
    print(f"disp_thresh_m={th.disp_thresh!r} speed_thresh_mps={th.speed_thresh!r} windows={cal.windows}")
    print(path)
    return 0


def cmd_train(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    clean = _read_clean(args, cfg, out)
    windows = WindowSet.concatenate([window_arrays(t) for t in clean])
    logger.info("Training on %d windows for %d epochs", len(windows), cfg.train.epochs)
    model, history = mlp_train(windows, cfg.train)
    save_model(model, _model_path(cfg, out))
    _write(out / "loss_history.csv", render_loss_csv(history))
    print(f"epochs={history.epochs} train_mae={history.train_mae[-1]!r} test_mae={history.test_mae[-1]!r}")
    return 0


def cmd_inject(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    """Build the attack campaign and write labeled trajectories plus a manifest."""
    clean = _read_clean(args, cfg, out)
    kinds = [AttackClass(k) for k in args.kind] if args.kind else None
    campaign = build_campaign(clean, kinds=kinds, thresholds=_thresholds(cfg, out), config=cfg.campaign)

    attacked_dir = out / "attacked"
    files: dict[str, str] = {}
    for inst in campaign.successful():
        assert inst.trajectory is not None
        save_csv(inst.trajectory, attacked_dir / f"{inst.instance_id}.csv")
        files[inst.instance_id] = f"attacked/{inst.instance_id}.csv"
    _write(attacked_dir / MANIFEST, json.dumps(campaign.manifest(files), indent=2) + "\n")

    skipped = len(campaign.instances) - len(files)
    for kind, count in campaign.counts().items():
        print(f"{kind}: {count}")
    if skipped:
        print(f"Warning: {skipped} instance(s) skipped, see {MANIFEST}", file=sys.stderr)
    return 0


def _detect_file(
    path: Path,
    predictor: Predictor,
    cal: Calibration,
    config: DetectorConfig,
    meta: dict[str, Any],
) -> tuple[str, str, str, int, int]:
    traj = load_csv(path)
    verdicts = detect_calibrated(traj, predictor, cal, config)
    flagged = sum(v.flagged for v in verdicts)
    return (
        path.stem,
        render_verdicts_csv(verdicts),
        render_detection_json(verdicts, traj.source, cal.thresholds, meta),
        flagged,
        len(verdicts),
    )


def cmd_detect(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    """Write a verdict CSV and JSON report for every input file."""
    if args.inputs:
        inputs = [Path(p) for p in args.inputs]
    else:
        inputs = _csv_files(out / "attacked", "run 'spoofguard inject' or name input files")
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")

    cal = load_calibration(_calibration_path(cfg, out))
    fixed = cfg.thresholds.fixed()
    if fixed is not None:
        cal = replace(cal, thresholds=fixed)
    predictor = _predictor(cfg, out)
    meta = _meta(cfg)
    n = len(inputs)
    jobs = [(p, predictor, cal, cfg.detector, meta) for p in inputs]

    if args.jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_detect_file, *zip(*jobs)))
    else:
        results = [_detect_file(*job) for job in jobs]

    verdict_dir = out / "verdicts"
    for stem, csv_text, json_text, flagged, windows in results:
        _write(verdict_dir / f"{stem}.csv", csv_text)
        _write(verdict_dir / f"{stem}.json", json_text)
        print(f"{stem}: {flagged}/{windows} windows flagged")
    return 0


def cmd_evaluate(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    manifest_path = out / "attacked" / MANIFEST
    if not manifest_path.exists():
        raise DataValidationError(f"attack manifest not found: {manifest_path} (run 'spoofguard inject' first)")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    runs = []
    for entry in manifest["instances"]:
        if entry.get("file") is None:
            continue
        labeled = out / entry["file"]
        verdict_file = out / "verdicts" / f"{entry['id']}.csv"
        if not verdict_file.exists():
            raise DataValidationError(f"no verdicts for {entry['id']}: {verdict_file} (run 'spoofguard detect' first)")
        traj = load_csv(labeled)
        verdicts = parse_verdicts_csv(verdict_file.read_text(encoding="utf-8"), verdict_file.name)
        truth = window_truth(traj.labels)
        if len(verdicts) != len(truth):
            raise DataValidationError(
                f"{verdict_file.name} has {len(verdicts)} windows but {labeled.name} has {len(truth)}"
            )
        runs.append((entry["id"], AttackClass(entry["kind"]), verdicts, truth))
    if not runs:
        raise DataValidationError(f"{manifest_path} lists no attacked files")

    result = evaluate(runs)
    table = render_table2(result, args.title)
    _write(out / "metrics.json", render_metrics_json(result, _meta(cfg)))
    _write(out / "table2.md", table)
    _write(out / "confusion.csv", render_confusion_csv(result))
    _write(out / "roc_points.csv", render_roc_csv(result))
    logger.info("Evaluated %d instance(s)", len(runs))
    print(table, end="")
    return 0


def cmd_pipeline(args: argparse.Namespace, cfg: RunConfig, out: Path) -> int:
    """Run the whole experiment; synthetic data is generated unless --data is given."""
    steps: list[tuple[str, Callable[[argparse.Namespace, RunConfig, Path], int]]] = [
        ("train", cmd_train),
        ("calibrate", cmd_calibrate),
        ("inject", cmd_inject),
        ("detect", cmd_detect),
        ("evaluate", cmd_evaluate),
    ]
    if args.data is None and cfg.paths.data is None:
        steps.insert(0, ("gen", cmd_gen))
    step_args = argparse.Namespace(**vars(args), kind=None, inputs=[])
    for name, command in steps:
        logger.info("Pipeline step: %s", name)
        status = command(step_args, cfg, out)
        if status != 0:
            return status
    return 0


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig, Path], int]] = {
    "gen": cmd_gen,
    "calibrate": cmd_calibrate,
    "train": cmd_train,
    "inject": cmd_inject,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}
