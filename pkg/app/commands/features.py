"""``features``: extract the feature matrix of the configured regime."""

import argparse
import logging
from pathlib import Path

from app.commands.common import write_config_echo
from app.core.config import PipelineConfig
from app.services.features.batch import FeatureBatchRunner, FeatureRun
from app.services.features.matrix import write_feature_matrix

logger = logging.getLogger(__name__)

NAME = "features"
HELP = "filter, segment, denoise and extract features into features.csv"
NEEDS_DATASET = True

FEATURES_FILE = "features.csv"
FAILURES_FILE = "failures.json"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    """No verb-specific arguments."""


def extract_to(config: PipelineConfig, out_dir: Path) -> FeatureRun:
    """Run extraction and write the feature table (plus any failure log) to ``out_dir``."""
    runner = FeatureBatchRunner(config)
    result = runner.run()
    write_feature_matrix(result.frame, out_dir / FEATURES_FILE)
    if result.failures:
        (out_dir / FAILURES_FILE).write_text(
            runner.tracker.export_failures("json"), encoding="utf-8"
        )
    write_config_echo(config, out_dir)
    return result


def run(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write ``features.csv`` under the output directory."""
    out_dir = Path(config.output.directory)
    result = extract_to(config, out_dir)
    print(
        f"{len(result.frame)} segments x {result.frame.shape[1] - 4} features -> "
        f"{out_dir / FEATURES_FILE} ({result.summary.failed_segments} failed)"
    )
    return 0
