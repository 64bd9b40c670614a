"""``report``: render the markdown results document and figure data."""

import argparse
import logging
from pathlib import Path

from app.core.config import PipelineConfig
from app.core.exceptions import ConfigError, EhgValidationError
from app.database.repositories.record_repository import RecordRepository
from app.services.reporting.plot_data import write_conditioning_plot_data
from app.services.reporting.results_document import ResultsDocumentGenerator

logger = logging.getLogger(__name__)

NAME = "report"
HELP = "render RESULTS.md from evaluation or ablation output directories"
NEEDS_DATASET = False


def add_arguments(parser: argparse.ArgumentParser) -> None:
    """Add the input directories and the optional figure record."""
    parser.add_argument(
        "inputs",
        nargs="*",
        type=Path,
        help="directories holding report.json files (default: the output directory)",
    )
    parser.add_argument(
        "--record",
        help="also write PSD and KLT eigenvalue plot data for this dataset record",
    )
    parser.add_argument(
        "--channel",
        help="raw channel label for --record (default: the first raw EHG channel)",
    )


def run(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write ``RESULTS.md`` and, with ``--record``, the figure data into the output directory.

    With ``--record`` and no explicit inputs only the figure data is written.
    """
    out_dir = Path(config.output.directory)
    if args.record:
        root = Path(config.dataset.root)
        if not root.is_dir():
            raise ConfigError(f"dataset root {root} does not exist")
        repository = RecordRepository(root, index_file=config.dataset.index)
        if repository.find_one(f"{args.record}.hea") is None:
            raise EhgValidationError(f"record {args.record} not found under {root}")
        record = repository.load_record(args.record)
        paths = write_conditioning_plot_data(record, config, out_dir, args.channel)
        print(f"figure data -> {paths['psd']}, {paths['eigenvalues']}")
        if not args.inputs:
            return 0

    inputs = args.inputs or [out_dir]
    path = ResultsDocumentGenerator().generate(inputs, out_dir)
    print(f"results document -> {path}")
    return 0
