"""``evaluate``: repeated cross-validation on an extracted feature matrix."""

import argparse
import logging
from pathlib import Path
from typing import Optional

from app.commands.common import model_specs, write_config_echo
from app.commands.features import FEATURES_FILE
from app.core.config import PipelineConfig
from app.database.models.evaluation import EvalReport
from app.services.evaluation.experiment import run_experiment
from app.services.features.extractor import FeatureSettings
from app.services.features.matrix import read_feature_matrix, to_labeled_dataset, validate_schema
from app.services.reporting.writers import write_evaluation_outputs

logger = logging.getLogger(__name__)

NAME = "evaluate"
HELP = "run the balanced, stratified, repeated cross-validation on features.csv"
NEEDS_DATASET = False


def add_arguments(parser: argparse.ArgumentParser) -> None:
    """Add ``--features``."""
    parser.add_argument(
        "--features",
        type=Path,
        default=None,
        help=f"feature matrix (default: <out>/{FEATURES_FILE})",
    )


def evaluate_file(
    config: PipelineConfig, features_path: Path, out_dir: Path, n_channels: Optional[int] = None
) -> EvalReport:
    """Validate a feature file against the configuration, evaluate it and write the outputs.

    The schema is checked before any model is trained.
    """
    frame = read_feature_matrix(features_path)
    validate_schema(frame, FeatureSettings.from_config(config), n_channels)
    dataset = to_labeled_dataset(frame)
    report = run_experiment(
        config.experiment_plan(),
        dataset,
        model_specs(config),
        jobs=config.output.effective_jobs,
    )
    write_evaluation_outputs(report, out_dir)
    write_config_echo(config, out_dir)
    return report


def run(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write the summary, cells, AUC plot data and JSON report."""
    out_dir = Path(config.output.directory)
    features_path = args.features or out_dir / FEATURES_FILE
    report = evaluate_file(config, features_path, out_dir)
    best = max(
        (s for s in report.summaries if s.metric == "auc"), key=lambda s: s.mean, default=None
    )
    suffix = f"; best AUC {best.model} {best.mean:.4f}" if best else ""
    print(f"evaluated {len(report.models)} models on {len(report.cells)} cells -> {out_dir}{suffix}")
    return 0
