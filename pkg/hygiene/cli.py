"""Command-line entry point: ``hygienetool [global flags] <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .classifiers.registry import FAMILY_LABELS
from .classifiers.serialization import load_model, save_model
from .config import PipelineConfig, Settings, load_settings, read_config_file, resolve_config
from .domain import FeatureMatrix
from .domain_schemas import COMPARE_FAMILIES
from .errors import FileMissing, InvalidConfig, PipelineError
from .services import report_service as reports
from .services.feature_service import extract_matrix, feature_summary, read_feature_files, write_feature_files
from .services.metrics_service import aggregate_folds, evaluate_predictions, pool_confusions, report_from_confusion
from .services.selection_service import cross_validate, fit_spec, stratified_kfold
from .services.signal_service import bandpass_filter, load_experiment_log, load_recording, load_logged_recordings
from .services.synth_service import generate_dataset, write_dataset
from .services.trial_service import compare_families, pair_subset, pairs_for, ten_run_trial
from .services.validation_service import validate_against_log

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# argparse destinations that are not PipelineConfig keys
_NON_CONFIG_ARGS = {"cmd", "func", "config", "show_config", "log_level", "band"}


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1 after printing the synopsis."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_band(raw: str) -> Tuple[float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi in Hz, got {raw!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"band edges must be numbers, got {raw!r}") from exc


# ---------------------------
# Inputs
# ---------------------------

def input_dir(config: PipelineConfig) -> Path:
    return Path(config.input) if config.input else Path(config.out) / "dataset"


def load_dataset_recordings(dataset: Path, config: PipelineConfig) -> Tuple[List[Any], List[Any]]:
    entries = load_experiment_log(dataset / "experiment_log.csv")
    recordings = load_logged_recordings(dataset, entries, config.sample_rate_hz, config.allow_rate_override)
    return entries, recordings


def load_matrix(config: PipelineConfig) -> FeatureMatrix:
    """Features from a labels/values pair, or extracted on the fly from a dataset directory."""
    path = input_dir(config)
    labels_path, values_path = path / "labels.csv", path / "values.csv"
    if labels_path.exists() or values_path.exists():
        return read_feature_files(labels_path, values_path)
    if (path / "experiment_log.csv").is_file():
        _, recordings = load_dataset_recordings(path, config)
        return extract_matrix([bandpass_filter(rec, config.band) for rec in recordings])
    raise FileMissing(
        f"{path} holds neither labels.csv/values.csv nor experiment_log.csv",
        location=str(path),
    )


# ---------------------------
# Commands
# ---------------------------

def cmd_synth(config: PipelineConfig) -> int:
    gen = config.generator_config()
    recordings, entries = generate_dataset(gen)
    out = write_dataset(Path(config.out) / "dataset", recordings, entries, gen)
    print(f"Wrote dataset: {out} ({len(recordings)} events)")
    return EXIT_OK


def cmd_ingest(config: PipelineConfig) -> int:
    dataset = input_dir(config)
    entries = load_experiment_log(dataset / "experiment_log.csv")

    recordings = []
    for path in sorted((dataset / "samples").glob("*.csv")):
        rec = load_recording(path, config.sample_rate_hz, config.allow_rate_override)
        # rejects a band the recording rate cannot hold
        bandpass_filter(rec, config.band)
        recordings.append(rec)
    logger.info("Ingested recordings: dataset=%s files=%d logged=%d", dataset, len(recordings), len(entries))

    report = validate_against_log(recordings, entries)
    out = Path(config.out)
    reports.write_json(out / "validation.json", reports.validation_document(report, config))
    reports.write_text(out / "validation.txt", reports.render_validation(report, config))

    print(
        f"Validation summary: entries={report.n_entries} matched={report.matched} "
        f"missing={report.missing} mismatched={report.mismatched}"
    )
    print(f"Report: {out / 'validation.json'}")
    return EXIT_OK if report.ok else EXIT_DATA


def cmd_features(config: PipelineConfig) -> int:
    matrix = load_matrix(config)
    out = Path(config.out)
    labels_path, values_path = write_feature_files(matrix, out)
    reports.write_text(out / "feature_summary.txt", reports.render_feature_summary(feature_summary(matrix), config))
    print(f"Wrote features: {labels_path}, {values_path} ({matrix.n_rows} rows)")
    return EXIT_OK


def cmd_train(config: PipelineConfig) -> int:
    matrix = load_matrix(config)
    fitted = fit_spec(config.model_spec(), matrix, config.seed, config.k)
    path = save_model(fitted.model, Path(config.out) / "model.json", fitted.feature_indices)
    logger.info(
        "Trained model: family=%s features=%s rows=%d",
        config.model,
        list(fitted.feature_indices),
        matrix.n_rows,
    )
    print(f"Wrote model: {path}")
    return EXIT_OK


def cmd_evaluate(config: PipelineConfig) -> int:
    matrix = load_matrix(config)
    out = Path(config.out)

    if config.model_path:
        model, indices = load_model(Path(config.model_path))
        classes = sorted(set(matrix.classes) | set(model.classes))
        predicted = model.predict(matrix.select(indices).values)
        report = evaluate_predictions(matrix.labels, predicted, classes)
        document = reports.evaluation_document(report, config, model_path=config.model_path, features=list(indices))
        title = f"saved model {Path(config.model_path).name}"
    else:
        plan = stratified_kfold(matrix.labels, config.k, config.seed)
        folds = cross_validate(config.model_spec(), matrix, plan, config.seed, classes=matrix.classes)
        report = report_from_confusion(pool_confusions([r.confusion for r in folds]))
        summary = aggregate_folds(folds)
        document = reports.evaluation_document(
            report,
            config,
            fold_plan=plan.to_dict(),
            summary={name: {"mean": ms.mean, "std": ms.std} for name, ms in summary.items()},
            folds=[r.as_dict() for r in folds],
        )
        title = f"{FAMILY_LABELS[config.model]} {config.k}-fold cross-validation"

    reports.write_json(out / "evaluation.json", document)
    reports.write_text(out / "evaluation.txt", reports.render_evaluation(report, config, title))
    print(f"Accuracy: {reports.format_percent(report.accuracy)} misclassified={report.misclassified}")
    return EXIT_OK


def cmd_trial(config: PipelineConfig) -> int:
    matrix = load_matrix(config)
    spec = config.model_spec().model_copy(update={"select_features": True})
    out = Path(config.out)
    for name, a, b in pairs_for(config.pair):
        report = ten_run_trial(
            pair_subset(matrix, a, b),
            spec,
            config.seed,
            attempts=config.attempts,
            ratio=config.ratio,
            k=config.k,
            cv_scope="all" if config.cv_all else "train",
            name=name,
        )
        reports.write_json(out / f"trial_{name}.json", reports.trial_document(report, config))
        reports.write_text(out / f"trial_{name}.txt", reports.render_trial(report, config))
        reports.write_csv(out / f"trial_{name}.csv", reports.trial_frame(report))
        reports.write_csv(out / f"trace_{name}.csv", reports.trace_frame(report))
        print(f"Trial {name}: overall accuracy {reports.format_percent(report.overall_accuracy)}")
    return EXIT_OK


def cmd_compare(config: PipelineConfig) -> int:
    matrix = load_matrix(config)
    specs = [config.model_spec(family) for family in COMPARE_FAMILIES]
    report = compare_families(matrix, specs, config.k, config.seed)
    out = Path(config.out)
    reports.write_json(out / "compare.json", reports.compare_document(report, config))
    reports.write_text(out / "compare.txt", reports.render_compare(report, config))
    reports.write_csv(out / "compare.csv", reports.compare_frame(report))
    for result in report.results:
        print(f"{result.label}: accuracy {result.summary['accuracy']}")
    return EXIT_OK


# ---------------------------
# Parser
# ---------------------------

def _add_common(p: argparse.ArgumentParser, band: bool = False) -> None:
    p.add_argument("--input", help="Features dir (labels.csv + values.csv) or dataset dir (default: <out>/dataset)")
    p.add_argument("--out", help="Output directory")
    p.add_argument("--seed", type=int, help="Base seed for every random plan")
    if band:
        p.add_argument("--band", type=parse_band, help="Band-pass edges in Hz as lo,hi (default 1,45)")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=list(COMPARE_FAMILIES), help="Classifier family")
    p.add_argument("--select-features", action="store_true", default=None, help="Pick the best 3 of 10 features by CV")
    p.add_argument("--budget", type=int, help="Hyperparameter search iterations (default 30)")


def make_parser() -> argparse.ArgumentParser:
    p = UsageParser(prog="hygienetool", description="Hygiene-event vibration classification pipeline")
    p.add_argument("--config", help="Flat key=value (or YAML) config file")
    p.add_argument("--show-config", action="store_true", help="Print the resolved configuration and exit")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    sub = p.add_subparsers(dest="cmd")

    ps = sub.add_parser("synth", help="Generate a synthetic labelled dataset")
    _add_common(ps)
    ps.add_argument("--n-per-class", type=int, help="Events per class (default 30)")
    ps.add_argument("--separability", type=float, help="0 = identical classes, 1 = default signatures")
    ps.add_argument("--intensity", type=float, help="Amplitude multiplier (default 1.0)")
    ps.set_defaults(func=cmd_synth)

    pi = sub.add_parser("ingest", help="Load a dataset and validate it against its experiment log")
    _add_common(pi, band=True)
    pi.set_defaults(func=cmd_ingest)

    pf = sub.add_parser("features", help="Filter recordings and write labels.csv/values.csv")
    _add_common(pf, band=True)
    pf.set_defaults(func=cmd_features)

    pt = sub.add_parser("train", help="Train a model on every row and write model.json")
    _add_common(pt, band=True)
    _add_model(pt)
    pt.add_argument("--k", type=int, help="Folds used by feature selection and tuning")
    pt.set_defaults(func=cmd_train)

    pe = sub.add_parser("evaluate", help="Confusion matrix and metrics for a saved model or a K-fold run")
    _add_common(pe, band=True)
    _add_model(pe)
    pe.add_argument("--model-path", help="Saved model.json to score")
    pe.add_argument("--k", type=int, help="Cross-validation folds (default 5)")
    pe.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("trial", help="Repeated 80:20 pairwise trial with selection and tuning")
    _add_common(pr, band=True)
    _add_model(pr)
    pr.add_argument("--pair", choices=["ks-bf", "bf-tf", "tf-ks", "all"], help="Pair scenario (default all)")
    pr.add_argument("--ratio", type=float, help="Train fraction per class (default 0.8)")
    pr.add_argument("--k", type=int, help="Folds for selection and tuning (default 5)")
    pr.add_argument("--attempts", type=int, help="Attempts per pair (default 10)")
    pr.add_argument("--cv-all", action="store_true", default=None, help="Select and tune on all pair rows")
    pr.set_defaults(func=cmd_trial)

    pc = sub.add_parser("compare", help="K-fold comparison of all six classifier families")
    _add_common(pc, band=True)
    pc.add_argument("--k", type=int, help="Cross-validation folds (default 5)")
    pc.add_argument("--select-features", action="store_true", default=None, help="Select 3 of 10 features per fold")
    pc.add_argument("--budget", type=int, help="SVM hyperparameter search iterations (default 30)")
    pc.set_defaults(func=cmd_compare)

    return p


def flag_values(args: argparse.Namespace) -> Dict[str, Any]:
    values = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG_ARGS and v is not None}
    band = getattr(args, "band", None)
    if band is not None:
        values["band_low_hz"], values["band_high_hz"] = band
    return values


def build_config(args: argparse.Namespace, settings: Settings) -> PipelineConfig:
    config_path = Path(args.config) if args.config else settings.config_path
    file_values = read_config_file(config_path) if config_path else {}
    return resolve_config(settings, file_values, flag_values(args))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    settings = load_settings()
    level = logging.getLevelName(args.log_level or settings.log_level)
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = build_config(args, settings)
    except InvalidConfig as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.show_config:
        sys.stdout.write(config.as_lines())
        return EXIT_OK
    if not args.cmd:
        parser.error("a subcommand is required")

    try:
        return int(args.func(config))
    except InvalidConfig as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"Data error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
